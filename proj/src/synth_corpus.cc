// src/synth_corpus.cc

// Copyright 2026  The kws-engine Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "kws/synth_corpus.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

#include "bytes.h"
#include "kws/error.h"
#include "kws/lattice_index.h"
#include "kws/util.h"

namespace kws {

Lexicon BuiltinLexicon() {
  static const char *const kEntries[] = {
      // Keywords.
      "ZERO Z IH R OW", "ONE W AH N", "TWO T UW", "THREE TH R IY", "FOUR F AO R",
      "FIVE F AY V", "SIX S IH K S", "SEVEN S EH V AH N", "EIGHT EY T", "NINE N AY N",
      "TEN T EH N", "THERE DH EH R", "THEY DH EY", "BANK B AE NG K", "NUMBER N AH M B ER",
      "POINT P OY N T", "MONTH M AH N TH", "WITH W IH TH", "WITH W IH DH", "YEAR Y IH R",
      "PEOPLE P IY P AH L", "GOT G AA T", "ORANGE AO R AH N JH", "ORANGE AO R IH N JH",
      "BEAUTIFUL B Y UW T AH F AH L", "LIKE L AY K", "YELLOW Y EH L OW", "TEACHER T IY CH ER",
      "TEETH T IY TH", "BIRTHDAY B ER TH D EY", "RED R EH D", "FEBRUARY F EH B R UW EH R IY",
      "FEBRUARY F EH B Y UW EH R IY",
      // Fillers.
      "THE DH AH", "AND AE N D", "IS IH Z", "WE W IY", "SEE S IY", "DOG D AO G", "CAT K AE T",
      "HOUSE HH AW S", "GREEN G R IY N", "BLUE B L UW", "HAPPY HH AE P IY", "SCHOOL S K UW L",
      "PLAY P L EY", "TREE T R IY", "BOOK B UH K", "WATER W AO T ER", "MOTHER M AH DH ER",
      "LITTLE L IH T AH L", "FRIEND F R EH N D", "GARDEN G AA R D AH N", "JUMP JH AH M P"};
  Lexicon lex;
  for (const char *e : kEntries) {
    auto tok = SplitWhitespace(e);
    lex.Add(tok[0], std::vector<std::string>(tok.begin() + 1, tok.end()));
  }
  return lex;
}

PhoneSet PhonesForLexicon(const Lexicon &lexicon) {
  std::set<std::string> used;
  for (const auto &e : lexicon.entries())
    for (const auto &p : e.phones)
      if (p != "SIL") used.insert(p);
  std::vector<std::string> phones = {"SIL"};
  phones.insert(phones.end(), used.begin(), used.end());
  return PhoneSet(phones);
}

CorpusSpec CorpusSpecFromJson(const std::string &json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorCode::kParseError, std::string("corpus spec: ") + e.what());
  }
  if (!j.is_object()) Fail(ErrorCode::kParseError, "corpus spec must be a JSON object");
  CorpusSpec s;
  try {
    for (const auto &[key, v] : j.items()) {
      if (key == "seed") s.seed = v.get<uint64_t>();
      else if (key == "dim") s.dim = v.get<int>();
      else if (key == "frame_shift") s.frame_shift = v.get<float>();
      else if (key == "train_utts") s.train_utts = v.get<int>();
      else if (key == "test_utts") s.test_utts = v.get<int>();
      else if (key == "train_speakers") s.train_speakers = v.get<int>();
      else if (key == "test_speakers") s.test_speakers = v.get<int>();
      else if (key == "words_min") s.words_min = v.get<int>();
      else if (key == "words_max") s.words_max = v.get<int>();
      else if (key == "frames_per_phone_min") s.frames_per_phone_min = v.get<int>();
      else if (key == "frames_per_phone_max") s.frames_per_phone_max = v.get<int>();
      else if (key == "sil_min") s.sil_min = v.get<int>();
      else if (key == "sil_max") s.sil_max = v.get<int>();
      else if (key == "keyword_prob") s.keyword_prob = v.get<double>();
      else if (key == "mean_scale") s.mean_scale = v.get<double>();
      else if (key == "variance") s.variance = v.get<double>();
      else if (key == "speaker_scale") s.speaker_scale = v.get<double>();
      else if (key == "adult_age") s.adult_age = v.get<double>();
      else if (key == "mismatch") s.mismatch = v.get<double>();
      else if (key == "noise_snr_db") {
        if (!v.is_null()) s.noise_snr_db = v.get<double>();
      } else if (key == "keywords") s.keywords = v.get<std::vector<std::string>>();
      else if (key == "bands") {
        s.bands.clear();
        for (const auto &b : v) {
          auto t = b.get<std::vector<double>>();
          if (t.size() != 3) Fail(ErrorCode::kParseError, "corpus spec: bands need 3 numbers each");
          s.bands.push_back({t[0], t[1], t[2]});
        }
      } else if (key == "lexicon") {
        Lexicon lex;
        for (const auto &line : v.get<std::vector<std::string>>()) {
          auto tok = SplitWhitespace(line);
          if (tok.size() < 2) Fail(ErrorCode::kParseError, "corpus spec: bad lexicon entry '" + line + "'");
          lex.Add(tok[0], std::vector<std::string>(tok.begin() + 1, tok.end()));
        }
        s.lexicon = std::move(lex);
      } else {
        Fail(ErrorCode::kParseError, "corpus spec: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorCode::kParseError, std::string("corpus spec: ") + e.what());
  }
  return s;
}

CorpusSpec ReadCorpusSpec(const std::string &path) { return CorpusSpecFromJson(ReadFileBytes(path)); }

namespace {

void CheckSpec(const CorpusSpec &s) {
  auto bad = [](const std::string &m) { Fail(ErrorCode::kInvalidArgument, "corpus spec: " + m); };
  if (s.dim < 1) bad("dim must be positive");
  if (!(s.frame_shift > 0.0f)) bad("frame_shift must be positive");
  if (s.train_utts < 0 || s.test_utts < 0) bad("utterance counts must be >= 0");
  if (s.train_speakers < 1 || s.test_speakers < 1) bad("speaker counts must be positive");
  if (s.words_min < 1 || s.words_max < s.words_min) bad("need 1 <= words_min <= words_max");
  if (s.frames_per_phone_min < 1 || s.frames_per_phone_max < s.frames_per_phone_min)
    bad("need 1 <= frames_per_phone_min <= frames_per_phone_max");
  if (s.sil_min < 0 || s.sil_max < s.sil_min) bad("need 0 <= sil_min <= sil_max");
  if (!(s.variance > 0.0)) bad("variance must be positive");
  if (s.keyword_prob < 0.0 || s.keyword_prob > 1.0) bad("keyword_prob must lie in [0, 1]");
  if (s.bands.empty()) bad("at least one age band is needed");
}

int UniformInt(std::mt19937_64 &rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Per-phone emission parameters of one domain.
struct Emission {
  std::vector<Eigen::VectorXd> means;
  double variance = 0.0;
};

struct Layout {
  std::string utt_id;
  int speaker = 0;
  std::vector<std::string> words;
  std::vector<int> frames;  // phone index per frame
  std::vector<RefOccurrence> refs;
};

}  // namespace

SynthCorpus GenerateCorpus(const CorpusSpec &spec) {
  CheckSpec(spec);
  SynthCorpus corpus;
  corpus.lexicon = spec.lexicon ? *spec.lexicon : BuiltinLexicon();
  if (corpus.lexicon.NumWordIds() == 0) Fail(ErrorCode::kEmptyLexicon, "corpus lexicon is empty");
  corpus.phones = PhonesForLexicon(corpus.lexicon);
  const int num_phones = corpus.phones.size();
  const int dim = spec.dim;

  std::vector<std::string> keywords;
  for (const auto &k : spec.keywords.empty() ? BuiltinKeywordSet(10) : spec.keywords)
    if (!corpus.lexicon.WordIds(k).empty()) keywords.push_back(corpus.lexicon.entry(corpus.lexicon.WordIds(k)[0]).word);
  corpus.keywords = keywords;
  const std::set<std::string> keyword_set(keywords.begin(), keywords.end());
  std::vector<std::string> fillers;
  {
    std::set<std::string> words;
    for (const auto &e : corpus.lexicon.entries())
      if (!keyword_set.count(e.word)) words.insert(e.word);
    fillers.assign(words.begin(), words.end());
  }

  // Shared acoustic model of the "adult" domain.
  std::mt19937_64 model_rng(DeriveSeed(spec.seed, "synth-model"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Emission adult;
  adult.variance = spec.variance;
  adult.means.resize(num_phones);
  for (auto &m : adult.means) {
    m.resize(dim);
    for (int d = 0; d < dim; ++d) m[d] = spec.mean_scale * gauss(model_rng);
  }
  Eigen::MatrixXd warp(dim, dim);
  Eigen::VectorXd shift(dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) warp(r, c) = gauss(model_rng) / std::sqrt(static_cast<double>(dim));
  for (int d = 0; d < dim; ++d) shift[d] = 0.5 * spec.mean_scale * gauss(model_rng);
  auto domain = [&](double strength) {
    Emission e;
    e.variance = spec.variance * (1.0 + 0.5 * strength);
    for (const auto &m : adult.means) e.means.push_back(m + strength * (warp * m + shift));
    return e;
  };
  double feature_power = adult.variance;
  for (const auto &m : adult.means) feature_power += m.squaredNorm() / dim / num_phones;

  auto layout_split = [&](const std::string &prefix, int num_utts, int num_speakers) {
    std::mt19937_64 rng(DeriveSeed(spec.seed, prefix + "-layout"));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Layout> utts(num_utts);
    const double fs = static_cast<double>(spec.frame_shift);
    for (int u = 0; u < num_utts; ++u) {
      Layout &l = utts[u];
      l.speaker = u % num_speakers;
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%s_s%03d_u%04d", prefix.c_str(), l.speaker, u);
      l.utt_id = buf;
      auto add_sil = [&] {
        const int n = UniformInt(rng, spec.sil_min, spec.sil_max);
        l.frames.insert(l.frames.end(), n, 0);
      };
      const int num_words = UniformInt(rng, spec.words_min, spec.words_max);
      add_sil();
      for (int w = 0; w < num_words; ++w) {
        const bool pick_kw = !keywords.empty() && (fillers.empty() || unit(rng) < spec.keyword_prob);
        const auto &pool = pick_kw ? keywords : fillers;
        const std::string &word = pool[UniformInt(rng, 0, static_cast<int>(pool.size()) - 1)];
        const auto ids = corpus.lexicon.WordIds(word);
        const auto &pron = corpus.lexicon.entry(ids[UniformInt(rng, 0, static_cast<int>(ids.size()) - 1)]).phones;
        const int start = static_cast<int>(l.frames.size());
        for (const auto &ph : pron) {
          const int n = UniformInt(rng, spec.frames_per_phone_min, spec.frames_per_phone_max);
          l.frames.insert(l.frames.end(), n, corpus.phones.Index(ph));
        }
        const int end = static_cast<int>(l.frames.size());
        l.words.push_back(word);
        if (keyword_set.count(word)) l.refs.push_back({word, l.utt_id, start * fs, end * fs});
        add_sil();
      }
    }
    return utts;
  };

  auto emit_split = [&](const std::string &prefix, const std::vector<Layout> &utts,
                        const std::vector<double> &speaker_age,
                        const std::vector<double> &speaker_strength, bool noisy, SynthSplit *out) {
    std::mt19937_64 spk_rng(DeriveSeed(spec.seed, prefix + "-speakers"));
    std::vector<Eigen::VectorXd> offsets(speaker_age.size());
    for (auto &o : offsets) {
      o.resize(dim);
      for (int d = 0; d < dim; ++d) o[d] = spec.speaker_scale * gauss(spk_rng);
    }
    std::vector<Emission> domains;
    for (double s : speaker_strength) domains.push_back(domain(s));
    std::mt19937_64 emit_rng(DeriveSeed(spec.seed, prefix + "-emit"));
    std::mt19937_64 noise_rng(DeriveSeed(spec.seed, prefix + "-noise"));
    const double noise_sd =
        noisy ? std::sqrt(feature_power / std::pow(10.0, *spec.noise_snr_db / 10.0)) : 0.0;
    const double fs = static_cast<double>(spec.frame_shift);
    for (const auto &l : utts) {
      const Emission &e = domains[l.speaker];
      const double sd = std::sqrt(e.variance);
      FeatureMatrix m;
      m.utt_id = l.utt_id;
      m.frame_shift = spec.frame_shift;
      m.Resize(static_cast<int>(l.frames.size()), dim);
      for (int t = 0; t < m.num_rows; ++t) {
        const int p = l.frames[t];
        for (int d = 0; d < dim; ++d) {
          double x = e.means[p][d] + offsets[l.speaker][d] + sd * gauss(emit_rng);
          if (noisy) x += noise_sd * gauss(noise_rng);
          m(t, d) = static_cast<float>(x);
        }
      }
      out->labels[l.utt_id] = l.frames;
      out->transcripts[l.utt_id] = l.words;
      out->refs.insert(out->refs.end(), l.refs.begin(), l.refs.end());
      SpeakerInfo info;
      info.speaker_id = prefix + "_s" + std::to_string(l.speaker);
      info.age = speaker_age[l.speaker];
      info.duration = m.num_rows * fs;
      out->total_sec += *info.duration;
      out->meta[l.utt_id] = info;
      out->feats.push_back(std::move(m));
    }
  };

  // Training speakers are adults in the undistorted domain.
  {
    const auto utts = layout_split("train", spec.train_utts, spec.train_speakers);
    std::vector<double> ages(spec.train_speakers, spec.adult_age);
    std::vector<double> strengths(spec.train_speakers, 0.0);
    emit_split("train", utts, ages, strengths, false, &corpus.train);
  }
  {
    const auto utts = layout_split("test", spec.test_utts, spec.test_speakers);
    std::mt19937_64 age_rng(DeriveSeed(spec.seed, "test-ages"));
    std::vector<double> ages(spec.test_speakers), strengths(spec.test_speakers);
    for (int s = 0; s < spec.test_speakers; ++s) {
      const AgeBand &b = spec.bands[s % spec.bands.size()];
      ages[s] = UniformInt(age_rng, static_cast<int>(std::ceil(b.age_min)),
                           static_cast<int>(std::floor(b.age_max)));
      strengths[s] = spec.mismatch * b.strength;
    }
    emit_split("test", utts, ages, strengths, spec.noise_snr_db.has_value(), &corpus.test);
  }
  return corpus;
}

PhoneSet ReadPhoneSet(const std::string &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorCode::kNotFound, path);
  std::vector<std::string> phones;
  std::string line;
  while (std::getline(is, line))
    for (auto &tok : SplitWhitespace(line)) phones.push_back(tok);
  return PhoneSet(phones);
}

void WritePhoneSet(const PhoneSet &phones, const std::string &path) {
  std::string out;
  for (const auto &p : phones.symbols()) out += p + "\n";
  WriteFileBytes(path, out);
}

std::vector<std::string> ReadKeywordList(const std::string &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorCode::kNotFound, path);
  std::vector<std::string> kws;
  std::string line;
  while (std::getline(is, line)) {
    const auto tok = SplitWhitespace(line);
    if (tok.empty()) continue;
    std::string kw;
    for (const auto &t : tok) kw += (kw.empty() ? "" : " ") + t;
    kws.push_back(kw);
  }
  return kws;
}

namespace {
void WriteTranscripts(const std::map<std::string, std::vector<std::string>> &tr,
                      const std::string &path) {
  std::string out;
  for (const auto &[utt, words] : tr) {
    out += utt;
    for (const auto &w : words) out += " " + w;
    out += "\n";
  }
  WriteFileBytes(path, out);
}
}  // namespace

void WriteCorpus(const SynthCorpus &corpus, const std::string &dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) Fail(ErrorCode::kIoError, "cannot create " + dir + ": " + ec.message());
  const std::string base = dir + "/";
  WritePhoneSet(corpus.phones, base + "phones.txt");
  corpus.lexicon.Write(base + "lexicon.txt");
  std::string kw;
  for (const auto &k : corpus.keywords) kw += k + "\n";
  WriteFileBytes(base + "keywords.txt", kw);
  for (const auto &[name, split] : {std::pair<std::string, const SynthSplit *>{"train", &corpus.train},
                                    {"test", &corpus.test}}) {
    WriteArchive(split->feats, base + name + ".fea");
    WriteFrameLabels(split->labels, base + name + ".ali");
    WriteTranscripts(split->transcripts, base + name + ".txt");
  }
  WriteRefs(corpus.test.refs, base + "test.refs.tsv");
  WriteSpeakerMeta(corpus.test.meta, base + "test.meta.tsv");
  WriteFileBytes(base + "test.duration", FormatDouble(corpus.test.total_sec) + "\n");
}

}  // namespace kws

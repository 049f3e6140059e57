// tests/synth_corpus_test.cc

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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "kws/lattice_index.h"
#include "kws/synth_corpus.h"
#include "test_util.h"

namespace kws {
namespace {

using testing::CodeOf;

CorpusSpec SmallSpec(uint64_t seed) {
  CorpusSpec s;
  s.seed = seed;
  s.train_utts = 40;
  s.test_utts = 30;
  s.train_speakers = 5;
  s.test_speakers = 6;
  return s;
}

TEST(SynthCorpusTest, TinyArithmetic) {
  CorpusSpec s;
  Lexicon lex;
  lex.Add("GO", {"G", "OW"});
  s.lexicon = lex;
  s.keywords = {"GO"};
  s.train_utts = s.test_utts = 1;
  s.train_speakers = s.test_speakers = 1;
  s.words_min = s.words_max = 1;
  s.frames_per_phone_min = s.frames_per_phone_max = 3;
  s.sil_min = s.sil_max = 0;
  const SynthCorpus c = GenerateCorpus(s);
  ASSERT_EQ(c.test.feats.size(), 1u);
  EXPECT_EQ(c.test.feats[0].num_rows, 6);
  EXPECT_EQ(c.test.feats[0].num_cols, 13);
  ASSERT_EQ(c.test.refs.size(), 1u);
  EXPECT_DOUBLE_EQ(c.test.refs[0].start, 0.0);
  EXPECT_DOUBLE_EQ(c.test.refs[0].end, 6 * static_cast<double>(s.frame_shift));
  EXPECT_EQ(c.phones.symbols(), (std::vector<std::string>{"SIL", "G", "OW"}));
  EXPECT_EQ(c.test.labels.begin()->second, (std::vector<int>{1, 1, 1, 2, 2, 2}));
}

TEST(SynthCorpusTest, DeterministicFiles) {
  testing::TempDir a("syn"), b("syn"), c("syn");
  WriteCorpus(GenerateCorpus(SmallSpec(3)), a.str());
  WriteCorpus(GenerateCorpus(SmallSpec(3)), b.str());
  WriteCorpus(GenerateCorpus(SmallSpec(4)), c.str());
  int files = 0;
  for (const auto &entry : std::filesystem::directory_iterator(a.str())) {
    const std::string name = entry.path().filename().string();
    EXPECT_EQ(testing::Slurp(a / name), testing::Slurp(b / name)) << name;
    ++files;
  }
  EXPECT_EQ(files, 12);
  EXPECT_NE(testing::Slurp(a / "test.fea"), testing::Slurp(c / "test.fea"));
}

// Word spans recovered from the frame labels: maximal non-silence runs.
std::vector<std::pair<int, int>> WordRuns(const std::vector<int> &labels) {
  std::vector<std::pair<int, int>> runs;
  for (int t = 0; t < static_cast<int>(labels.size()); ++t) {
    if (labels[t] == 0) continue;
    if (runs.empty() || runs.back().second != t || (t > 0 && labels[t - 1] == 0))
      runs.push_back({t, t + 1});
    else
      runs.back().second = t + 1;
  }
  return runs;
}

TEST(SynthCorpusTest, ReferencesFollowAlignment) {
  const SynthCorpus c = GenerateCorpus(SmallSpec(5));
  const std::set<std::string> kws(c.keywords.begin(), c.keywords.end());
  std::map<std::string, int> ref_count, text_count;
  size_t next_ref = 0;
  for (const auto &f : c.test.feats) {
    const auto runs = WordRuns(c.test.labels.at(f.utt_id));
    const auto &words = c.test.transcripts.at(f.utt_id);
    ASSERT_EQ(runs.size(), words.size()) << f.utt_id;
    for (size_t w = 0; w < words.size(); ++w) {
      if (!kws.count(words[w])) continue;
      ++text_count[words[w]];
      ASSERT_LT(next_ref, c.test.refs.size());
      const RefOccurrence &r = c.test.refs[next_ref++];
      ASSERT_EQ(r.utt_id, f.utt_id);
      ASSERT_EQ(r.keyword_id, words[w]);
      ASSERT_EQ(r.start, runs[w].first * static_cast<double>(f.frame_shift));
      ASSERT_EQ(r.end, runs[w].second * static_cast<double>(f.frame_shift));
    }
  }
  for (const auto &r : c.test.refs) ++ref_count[r.keyword_id];
  EXPECT_EQ(next_ref, c.test.refs.size());
  EXPECT_EQ(ref_count, text_count);
  double total = 0.0;
  for (const auto &f : c.test.feats) total += f.num_rows * static_cast<double>(f.frame_shift);
  EXPECT_NEAR(c.test.total_sec, total, 1e-9);
  for (const auto &[utt, info] : c.test.meta) {
    ASSERT_TRUE(info.age.has_value());
    EXPECT_GE(*info.age, 4.0);
    EXPECT_LE(*info.age, 13.0);
  }
}

// Share of (phone, dim) cells whose train and test means differ by more than
// three two-sample standard errors.
double MeanShiftRate(const SynthCorpus &c) {
  const int np = c.phones.size(), dim = c.train.feats[0].num_cols;
  struct Acc {
    double n = 0, s = 0, ss = 0;
  };
  auto collect = [&](const SynthSplit &split) {
    std::vector<Acc> acc(np * dim);
    for (const auto &f : split.feats) {
      const auto &lab = split.labels.at(f.utt_id);
      for (int t = 0; t < f.num_rows; ++t)
        for (int d = 0; d < dim; ++d) {
          Acc &a = acc[lab[t] * dim + d];
          a.n += 1;
          a.s += f(t, d);
          a.ss += static_cast<double>(f(t, d)) * f(t, d);
        }
    }
    return acc;
  };
  const auto tr = collect(c.train), te = collect(c.test);
  int cells = 0, off = 0;
  for (size_t i = 0; i < tr.size(); ++i) {
    if (tr[i].n < 20 || te[i].n < 20) continue;
    const double m1 = tr[i].s / tr[i].n, m2 = te[i].s / te[i].n;
    const double v1 = tr[i].ss / tr[i].n - m1 * m1, v2 = te[i].ss / te[i].n - m2 * m2;
    const double se = std::sqrt(v1 / tr[i].n + v2 / te[i].n);
    ++cells;
    off += std::abs(m1 - m2) > 3.0 * se;
  }
  EXPECT_GT(cells, 100);
  return static_cast<double>(off) / cells;
}

TEST(SynthCorpusTest, IdentityTransformMatchesTrainDistribution) {
  CorpusSpec s = SmallSpec(6);
  s.train_utts = s.test_utts = 300;
  s.speaker_scale = 0.0;  // speaker offsets would correlate frames
  EXPECT_LT(MeanShiftRate(GenerateCorpus(s)), 0.01);
  s.mismatch = 1.0;
  EXPECT_GT(MeanShiftRate(GenerateCorpus(s)), 0.5);
}

TEST(SynthCorpusTest, ConditionsShareLayout) {
  CorpusSpec s = SmallSpec(7);
  const SynthCorpus base = GenerateCorpus(s);
  s.mismatch = 1.5;
  s.noise_snr_db = 5.0;
  const SynthCorpus other = GenerateCorpus(s);
  EXPECT_EQ(base.test.refs, other.test.refs);
  EXPECT_EQ(base.test.transcripts, other.test.transcripts);
  EXPECT_EQ(base.test.labels, other.test.labels);
  EXPECT_EQ(base.train.feats[0].data, other.train.feats[0].data);
  EXPECT_NE(base.test.feats[0].data, other.test.feats[0].data);
}

TEST(SynthCorpusTest, BuiltinLexiconCoversKeywords) {
  const Lexicon lex = BuiltinLexicon();
  for (const auto &k : BuiltinKeywords()) EXPECT_FALSE(lex.WordIds(k).empty()) << k;
  for (const char *w : {"WITH", "ORANGE", "FEBRUARY"}) EXPECT_EQ(lex.WordIds(w).size(), 2u) << w;
  EXPECT_EQ(PhonesForLexicon(lex).Symbol(0), "SIL");
}

TEST(SynthCorpusTest, SpecJsonAndErrors) {
  const CorpusSpec s = CorpusSpecFromJson(
      R"({"seed": 9, "dim": 5, "bands": [[4, 6, 1.0]], "lexicon": ["GO G OW", "NO N OW"], "keywords": ["GO"]})");
  EXPECT_EQ(s.seed, 9u);
  EXPECT_EQ(s.dim, 5);
  ASSERT_EQ(s.bands.size(), 1u);
  ASSERT_TRUE(s.lexicon.has_value());
  EXPECT_EQ(s.lexicon->NumWordIds(), 2);
  EXPECT_EQ(CodeOf([] { CorpusSpecFromJson(R"({"sede": 1})"); }), ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { CorpusSpecFromJson("[1, 2]"); }), ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { CorpusSpecFromJson("{"); }), ErrorCode::kParseError);
  CorpusSpec empty;
  empty.lexicon = Lexicon();
  EXPECT_EQ(CodeOf([&] { GenerateCorpus(empty); }), ErrorCode::kEmptyLexicon);
  CorpusSpec bad;
  bad.sil_min = 3;
  bad.sil_max = 1;
  EXPECT_EQ(CodeOf([&] { GenerateCorpus(bad); }), ErrorCode::kInvalidArgument);
}

TEST(SynthCorpusTest, WrittenFilesReadBack) {
  const SynthCorpus c = GenerateCorpus(SmallSpec(8));
  testing::TempDir dir("synio");
  WriteCorpus(c, dir.str());
  EXPECT_EQ(ReadPhoneSet(dir / "phones.txt").symbols(), c.phones.symbols());
  EXPECT_EQ(ReadKeywordList(dir / "keywords.txt"), c.keywords);
  EXPECT_EQ(ReadRefs(dir / "test.refs.tsv"), c.test.refs);
  EXPECT_EQ(ReadFrameLabels(dir / "train.ali"), c.train.labels);
  EXPECT_EQ(ReadSpeakerMeta(dir / "test.meta.tsv").size(), c.test.meta.size());
  EXPECT_EQ(Lexicon::Read(dir / "lexicon.txt").NumWordIds(), c.lexicon.NumWordIds());
}

}  // namespace
}  // namespace kws

// tools/kws.cc

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

// kws: command-line front end. One subcommand per pipeline stage plus
// `pipeline`, which runs every stage from a single JSON config.
//
// Exit status: 0 on success, 1 on a usage error, 2 on a data error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kws/acoustic_model.h"
#include "kws/audio.h"
#include "kws/decoder.h"
#include "kws/error.h"
#include "kws/features.h"
#include "kws/lattice_index.h"
#include "kws/perturb.h"
#include "kws/pipeline.h"
#include "kws/report.h"
#include "kws/scoring.h"
#include "kws/synth_corpus.h"
#include "kws/util.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace kws {
namespace {

std::string ReadText(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kNotFound, "cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void WriteText(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIoError, "cannot write " + path);
  out << text;
  if (!out) Fail(ErrorCode::kIoError, "write failed: " + path);
}

void EnsureDir(const std::string &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) Fail(ErrorCode::kIoError, "cannot create " + dir + ": " + ec.message());
}

// Sorted *.wav files of a directory.
std::vector<fs::path> WavFiles(const std::string &dir) {
  if (!fs::is_directory(dir)) Fail(ErrorCode::kNotFound, "not a directory: " + dir);
  std::vector<fs::path> out;
  for (const auto &e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".wav") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

// A number, or the path of a file whose first token is one.
double DurationArg(const std::string &arg) {
  try {
    return ParseDouble(arg, "--duration");
  } catch (const Error &) {
    const auto tok = SplitWhitespace(ReadText(arg));
    if (tok.empty()) Fail(ErrorCode::kParseError, arg + ": empty duration file");
    return ParseDouble(tok[0], arg);
  }
}

struct GenCorpusArgs {
  std::string spec, out;
  std::optional<uint64_t> seed;
  std::optional<double> mismatch, snr;
};

void RunGenCorpus(const GenCorpusArgs &a) {
  CorpusSpec spec = a.spec.empty() ? CorpusSpec{} : ReadCorpusSpec(a.spec);
  if (a.seed) spec.seed = *a.seed;
  if (a.mismatch) spec.mismatch = *a.mismatch;
  if (a.snr) spec.noise_snr_db = *a.snr;
  WriteCorpus(GenerateCorpus(spec), a.out);
}

struct MfccArgs {
  std::string wav_dir, out;
  MfccConfig cfg;
  bool log_mel = false;
  int sample_rate = 16000;
  int jobs = 1;
};

void RunMfcc(const MfccArgs &a) {
  const auto files = WavFiles(a.wav_dir);
  std::vector<FeatureMatrix> feats(files.size());
  ParallelFor(files.size(), a.jobs, [&](size_t i) {
    Waveform w = ReadWav(files[i].string());
    if (w.sample_rate != a.sample_rate) w = Resample(w, a.sample_rate);
    feats[i] = a.log_mel ? ComputeLogMel(w, a.cfg) : ComputeMfcc(w, a.cfg);
  });
  WriteArchive(feats, a.out);
}

struct TrainArgs {
  std::string feats, ali, phones, out;
  TrainOptions opts;
};

void RunTrainAm(const TrainArgs &a) {
  TrainStats stats;
  const FrameClassifier model = TrainClassifier(ReadArchive(a.feats), ReadFrameLabels(a.ali),
                                                ReadPhoneSet(a.phones), a.opts, &stats);
  model.Write(a.out);
  std::cerr << "train-am: initial loss " << FormatDouble(stats.initial_loss) << ", final loss "
            << FormatDouble(stats.final_loss) << ", frame accuracy "
            << FormatDouble(stats.frame_accuracy) << "\n";
}

struct DecodeArgs {
  std::string model, feats, lexicon, out;
  DecodeOptions opts;
  int jobs = 1;
};

void RunDecode(const DecodeArgs &a) {
  const auto lats = DecodeAll(ReadArchive(a.feats), FrameClassifier::Read(a.model),
                              Lexicon::Read(a.lexicon), a.opts, a.jobs);
  WriteLattices(lats, a.out);
}

struct IndexArgs {
  std::string lattices, out;
  IndexOptions opts;
  int jobs = 1;
};

void RunIndex(const IndexArgs &a) {
  double dev = 0.0;
  const auto index = IndexLattices(ReadLattices(a.lattices), a.opts, a.jobs, &dev);
  WriteIndex(index, a.out);
  std::cerr << "index: max |frame-cut sum - 1| = " << FormatDouble(dev) << "\n";
}

struct SearchArgs {
  std::string index, keywords, lexicon, out;
};

void RunSearch(const SearchArgs &a) {
  std::vector<std::string> oov;
  const auto dets = SearchKeywords(ReadIndex(a.index), ReadKeywordList(a.keywords),
                                   Lexicon::Read(a.lexicon), &oov);
  WriteDetections(dets, a.out);
}

struct ScoreArgs {
  std::string dets, refs, meta, duration, keywords, groups, det_csv, out, dets_out;
  ScoreOptions opts;
};

void RunScore(ScoreArgs a) {
  TrialSet trials;
  trials.total_speech_sec = DurationArg(a.duration);
  trials.refs = ReadRefs(a.refs);
  if (!a.meta.empty()) trials.meta = ReadSpeakerMeta(a.meta);
  if (!a.keywords.empty()) a.opts.scoring.keywords = ReadKeywordList(a.keywords);
  if (!a.groups.empty()) a.opts.groups = ParseAgeGroups(a.groups);
  const ScoreResult res = ScoreDetections(ReadDetections(a.dets), trials, a.opts);
  const std::string text = DumpJson(res.json);
  if (a.out.empty())
    std::cout << text;
  else
    WriteText(a.out, text);
  if (!a.det_csv.empty()) WriteText(a.det_csv, FormatDetCsv(res.report.det_curve));
  if (!a.dets_out.empty()) WriteDetections(res.dets, a.dets_out);
}

struct PerturbArgs {
  std::string kind, noise_wav, in, out;
  double factor = 1.0;
  std::optional<double> snr;
  std::optional<uint64_t> seed;
};

void RunPerturb(const PerturbArgs &a) {
  std::optional<Waveform> noise;
  if (a.kind == "noise") {
    if (a.noise_wav.empty() || !a.snr)
      Fail(ErrorCode::kInvalidArgument, "perturb --kind noise needs --noise-wav and --snr");
    noise = ReadWav(a.noise_wav);
  }
  EnsureDir(a.out);
  for (const auto &path : WavFiles(a.in)) {
    const Waveform w = ReadWav(path.string());
    Waveform y;
    if (a.kind == "noise") {
      const Waveform n = noise->sample_rate == w.sample_rate ? *noise : Resample(*noise, w.sample_rate);
      const MixResult m = MixNoise(w, n, *a.snr, a.seed);
      if (m.clipped) std::cerr << "perturb: warning: " << w.id << " clipped\n";
      y = m.wave;
    } else if (a.kind == "rate") {
      y = ModifyRate(w, a.factor, StftConfig::ForRate(w.sample_rate));
    } else if (a.kind == "pitch") {
      y = ModifyPitch(w, a.factor, StftConfig::ForRate(w.sample_rate));
    } else {
      y = ModifyFormants(w, a.factor);
    }
    WriteWav(y, (fs::path(a.out) / path.filename()).string());
  }
}

struct ReportArgs {
  std::string a, b, out;
};

// Paired tests on per-keyword TWV of two score reports.
void RunReport(const ReportArgs &args) {
  auto load = [](const std::string &path) {
    json j;
    try {
      j = json::parse(ReadText(path));
    } catch (const json::exception &e) {
      Fail(ErrorCode::kParseError, path + ": " + e.what());
    }
    return TwvReportFromJson(j);
  };
  const TwvReport ra = load(args.a), rb = load(args.b);
  std::vector<double> va, vb;
  std::vector<std::string> ids;
  PairKeywordTwv(ra, rb, &va, &vb, &ids);
  const json out = {{"schema", kReportSchema},
                    {"a", args.a},
                    {"b", args.b},
                    {"atwv_a", ra.atwv},
                    {"atwv_b", rb.atwv},
                    {"keywords", ids},
                    {"test", PairedTestToJson(PairedTests(va, vb))}};
  if (args.out.empty())
    std::cout << DumpJson(out);
  else
    WriteText(args.out, DumpJson(out));
}

struct PipelineArgs {
  std::string config, workdir, out;
  std::optional<uint64_t> seed;
  int jobs = 1;
};

void RunPipelineCmd(const PipelineArgs &a) {
  PipelineConfig cfg = a.config.empty() ? PipelineConfig{} : ReadPipelineConfig(a.config);
  if (cfg.score.groups.empty() && a.config.empty()) cfg.score.groups = ParseAgeGroups("4-6,7-9,10-13");
  if (a.seed) cfg.seed = *a.seed;
  const PipelineResult res = RunPipeline(cfg, a.jobs, a.workdir);
  const std::string text = DumpJson(res.report);
  if (!a.out.empty()) WriteText(a.out, text);
  if (a.out.empty() && a.workdir.empty()) std::cout << text;
  for (const auto &c : res.conditions)
    std::cerr << "pipeline: " << c.condition.name << " ATWV " << FormatDouble(c.score.report.atwv)
              << " MTWV " << FormatDouble(c.score.report.mtwv) << "\n";
}

int Main(int argc, char **argv) {
  CLI::App app{"Zero-shot keyword spotting engine", "kws"};
  app.require_subcommand(1);
  std::function<void()> action;

  GenCorpusArgs gen;
  auto *c = app.add_subcommand("gen-corpus", "Generate a synthetic feature-domain corpus");
  c->add_option("--spec", gen.spec, "Corpus spec JSON (defaults if omitted)");
  c->add_option("--out", gen.out, "Output directory")->required();
  c->add_option("--seed", gen.seed);
  c->add_option("--mismatch", gen.mismatch, "Child-like transform strength");
  c->add_option("--snr", gen.snr, "Emission noise SNR in dB");
  c->callback([&] { action = [&] { RunGenCorpus(gen); }; });

  MfccArgs mfcc;
  c = app.add_subcommand("mfcc", "MFCC (or log-mel) features of a directory of WAV files");
  c->add_option("--wav-dir", mfcc.wav_dir)->required();
  c->add_option("--out", mfcc.out, "FEA1 archive")->required();
  c->add_option("--frame-length-ms", mfcc.cfg.frame_length_ms)->capture_default_str();
  c->add_option("--frame-shift-ms", mfcc.cfg.frame_shift_ms)->capture_default_str();
  c->add_option("--num-mel-bins", mfcc.cfg.num_mel_bins)->capture_default_str();
  c->add_option("--num-ceps", mfcc.cfg.num_ceps)->capture_default_str();
  c->add_option("--low-freq", mfcc.cfg.low_freq)->capture_default_str();
  c->add_option("--high-freq", mfcc.cfg.high_freq)->capture_default_str();
  c->add_option("--preemph", mfcc.cfg.preemph)->capture_default_str();
  c->add_option("--dither", mfcc.cfg.dither)->capture_default_str();
  c->add_option("--seed", mfcc.cfg.dither_seed, "Dither seed");
  c->add_flag("--log-mel", mfcc.log_mel, "Write log-mel energies instead of cepstra");
  c->add_option("--sample-rate", mfcc.sample_rate, "Input is resampled to this rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c->add_option("--jobs", mfcc.jobs)->check(CLI::PositiveNumber);
  c->callback([&] { action = [&] { RunMfcc(mfcc); }; });

  std::string cmvn_in, cmvn_out, cmvn_meta;
  c = app.add_subcommand("cmvn", "Mean and variance normalization, per utterance or per speaker");
  c->add_option("--in", cmvn_in)->required();
  c->add_option("--out", cmvn_out)->required();
  c->add_option("--meta", cmvn_meta, "Speaker metadata TSV; pools statistics per speaker");
  c->callback([&] {
    action = [&] {
      if (cmvn_meta.empty()) {
        WriteArchive(CmvnAll(ReadArchive(cmvn_in)), cmvn_out);
        return;
      }
      std::map<std::string, std::string> utt2spk;
      for (const auto &[utt, info] : ReadSpeakerMeta(cmvn_meta)) utt2spk[utt] = info.speaker_id;
      WriteArchive(ApplyCmvnPerSpeaker(ReadArchive(cmvn_in), utt2spk), cmvn_out);
    };
  });

  std::string splice_in, splice_out;
  int splice_context = 4;
  c = app.add_subcommand("splice", "Stack +-context neighbouring frames");
  c->add_option("--in", splice_in)->required();
  c->add_option("--out", splice_out)->required();
  c->add_option("--context", splice_context)->capture_default_str();
  c->callback([&] {
    action = [&] { WriteArchive(SpliceAll(ReadArchive(splice_in), splice_context), splice_out); };
  });

  TrainArgs train;
  c = app.add_subcommand("train-am", "Train the frame classifier");
  c->add_option("--feats", train.feats)->required();
  c->add_option("--ali", train.ali, "Frame labels")->required();
  c->add_option("--phones", train.phones)->required();
  c->add_option("--out", train.out)->required();
  c->add_option("--hidden", train.opts.hidden_dims, "Hidden layer sizes")->capture_default_str();
  c->add_option("--lr", train.opts.learning_rate)->capture_default_str();
  c->add_option("--momentum", train.opts.momentum)->capture_default_str();
  c->add_option("--epochs", train.opts.epochs)->capture_default_str();
  c->add_option("--batch", train.opts.batch_size)->capture_default_str();
  c->add_option("--seed", train.opts.seed);
  c->callback([&] { action = [&] { RunTrainAm(train); }; });

  DecodeArgs dec;
  c = app.add_subcommand("decode", "Lattice-generating beam search");
  c->add_option("--model", dec.model)->required();
  c->add_option("--feats", dec.feats)->required();
  c->add_option("--lexicon", dec.lexicon)->required();
  c->add_option("--out", dec.out, "Lattice text file")->required();
  c->add_option("--beam", dec.opts.beam)->capture_default_str();
  c->add_option("--lattice-beam", dec.opts.lattice_beam)->capture_default_str();
  c->add_option("--word-penalty", dec.opts.word_penalty)->capture_default_str();
  c->add_option("--max-active", dec.opts.max_active)->capture_default_str();
  c->add_option("--retry-beam", dec.opts.retry_beam, "Beam for one retry after a failed search (0: none)")
      ->capture_default_str();
  c->add_option("--jobs", dec.jobs)->check(CLI::PositiveNumber);
  c->callback([&] { action = [&] { RunDecode(dec); }; });

  IndexArgs idx;
  c = app.add_subcommand("index", "Build the timed factor index");
  c->add_option("--lattices", idx.lattices)->required();
  c->add_option("--out", idx.out)->required();
  c->add_option("--max-factor-len", idx.opts.max_factor_len)->capture_default_str();
  c->add_option("--merge-tol", idx.opts.merge_tol)->capture_default_str();
  c->add_option("--jobs", idx.jobs)->check(CLI::PositiveNumber);
  c->callback([&] { action = [&] { RunIndex(idx); }; });

  SearchArgs srch;
  c = app.add_subcommand("search", "Look keywords up in an index");
  c->add_option("--index", srch.index)->required();
  c->add_option("--keywords", srch.keywords)->required();
  c->add_option("--lexicon", srch.lexicon)->required();
  c->add_option("--out", srch.out, "Detections TSV")->required();
  c->callback([&] { action = [&] { RunSearch(srch); }; });

  ScoreArgs sc;
  sc.opts.kst = false;
  c = app.add_subcommand("score", "ATWV/MTWV of a detection list");
  c->add_option("--dets", sc.dets)->required();
  c->add_option("--refs", sc.refs)->required();
  c->add_option("--meta", sc.meta);
  c->add_option("--duration", sc.duration, "Total speech seconds, or a file holding it")->required();
  c->add_option("--beta", sc.opts.scoring.beta)->capture_default_str();
  c->add_option("--theta", sc.opts.theta)->capture_default_str();
  c->add_option("--tol", sc.opts.scoring.tol_sec)->capture_default_str();
  c->add_flag("--kst", sc.opts.kst, "Keyword-specific threshold normalization");
  c->add_option("--groups", sc.groups, "Age groups, e.g. 4-6,7-9,10-13");
  c->add_option("--keywords", sc.keywords, "Keyword list to score");
  c->add_option("--det-csv", sc.det_csv);
  c->add_option("--dets-out", sc.dets_out, "Normalized detections with decisions");
  c->add_option("--out", sc.out, "Report JSON (stdout if omitted)");
  c->callback([&] { action = [&] { RunScore(sc); }; });

  PerturbArgs pert;
  c = app.add_subcommand("perturb", "Noise, rate, pitch or formant perturbation of WAV files");
  c->add_option("--kind", pert.kind)->required()->check(CLI::IsMember({"noise", "pitch", "rate", "formant"}));
  c->add_option("--factor", pert.factor, "Rate/pitch factor or formant alpha")->capture_default_str();
  c->add_option("--noise-wav", pert.noise_wav);
  c->add_option("--snr", pert.snr);
  c->add_option("--in", pert.in)->required();
  c->add_option("--out", pert.out)->required();
  c->add_option("--seed", pert.seed, "Random noise offset seed");
  c->callback([&] { action = [&] { RunPerturb(pert); }; });

  ReportArgs rep;
  c = app.add_subcommand("report", "Paired significance tests on two score reports");
  c->add_option("--a", rep.a)->required();
  c->add_option("--b", rep.b)->required();
  c->add_option("--out", rep.out);
  c->callback([&] { action = [&] { RunReport(rep); }; });

  PipelineArgs pipe;
  c = app.add_subcommand("pipeline", "Run every stage from one config");
  c->add_option("--config", pipe.config, "Pipeline config JSON");
  c->add_option("--seed", pipe.seed);
  c->add_option("--jobs", pipe.jobs)->check(CLI::PositiveNumber);
  c->add_option("--workdir", pipe.workdir, "Directory for intermediate artifacts");
  c->add_option("--out", pipe.out, "Report JSON");
  c->callback([&] { action = [&] { RunPipelineCmd(pipe); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "kws: " << e.what() << "\n\n" << app.help();
    return 1;
  }
  try {
    action();
  } catch (const Error &e) {
    std::cerr << "kws: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace
}  // namespace kws

int main(int argc, char **argv) { return kws::Main(argc, argv); }

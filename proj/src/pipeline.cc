// src/pipeline.cc

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

#include "kws/pipeline.h"

#include <cmath>
#include <filesystem>

#include "bytes.h"
#include "kws/error.h"
#include "kws/report.h"
#include "kws/util.h"

namespace kws {

using nlohmann::json;

std::vector<FeatureMatrix> CmvnAll(const std::vector<FeatureMatrix> &feats) {
  std::vector<FeatureMatrix> out;
  out.reserve(feats.size());
  for (const auto &f : feats) out.push_back(ApplyCmvn(f));
  return out;
}

std::vector<FeatureMatrix> SpliceAll(const std::vector<FeatureMatrix> &feats, int context) {
  std::vector<FeatureMatrix> out;
  out.reserve(feats.size());
  for (const auto &f : feats) out.push_back(Splice(f, context));
  return out;
}

std::vector<Lattice> DecodeAll(const std::vector<FeatureMatrix> &feats,
                               const FrameClassifier &model, const Lexicon &lexicon,
                               const DecodeOptions &opts, int jobs) {
  const LexiconGraph graph = BuildLexiconGraph(lexicon, model.phones());
  std::vector<Lattice> lats(feats.size());
  ParallelFor(feats.size(), jobs, [&](size_t i) {
    const PosteriorMatrix post = model.Posteriors(feats[i]);
    const Eigen::MatrixXd ll = ScaledLoglikes(post, model.priors());
    try {
      lats[i] = Decode(ll, feats[i].utt_id, feats[i].frame_shift, graph, lexicon, opts).lattice;
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kNoSurvivingPath || opts.retry_beam <= opts.beam) throw;
      DecodeOptions wide = opts;
      wide.beam = opts.retry_beam;
      lats[i] = Decode(ll, feats[i].utt_id, feats[i].frame_shift, graph, lexicon, wide).lattice;
    }
  });
  return lats;
}

TimedFactorIndex IndexLattices(const std::vector<Lattice> &lats, const IndexOptions &opts, int jobs,
                               double *max_cut_deviation) {
  std::vector<PosteriorLattice> plats(lats.size());
  std::vector<double> dev(lats.size(), 0.0);
  ParallelFor(lats.size(), jobs, [&](size_t i) {
    plats[i] = LatticePosteriors(lats[i]);
    for (double s : FrameCutSums(plats[i])) dev[i] = std::max(dev[i], std::abs(s - 1.0));
  });
  if (max_cut_deviation) {
    *max_cut_deviation = 0.0;
    for (double d : dev) *max_cut_deviation = std::max(*max_cut_deviation, d);
  }
  return BuildIndex(plats, opts, jobs);
}

std::vector<Detection> SearchKeywords(const TimedFactorIndex &index,
                                      const std::vector<std::string> &keywords,
                                      const Lexicon &lexicon, std::vector<std::string> *oov) {
  std::vector<Detection> dets;
  for (const auto &fst : BuildKeywordFsts(keywords, lexicon, oov)) {
    auto hits = Search(index, fst);
    dets.insert(dets.end(), hits.begin(), hits.end());
  }
  return dets;
}

ScoreResult ScoreDetections(const std::vector<Detection> &raw, const TrialSet &trials,
                            const ScoreOptions &opts) {
  ScoreResult res;
  res.dets = opts.kst ? KstNormalize(raw, trials, opts.scoring.beta) : raw;
  for (auto &d : res.dets) d.decision = d.score >= opts.theta;
  res.report = ComputeTwv(res.dets, trials, opts.theta, opts.scoring);
  if (!opts.groups.empty())
    res.groups = ComputeGroupReports(res.dets, trials, opts.groups, opts.theta, opts.scoring);
  res.json = TwvReportToJson(res.report);
  res.json["schema"] = kReportSchema;
  res.json["kst"] = opts.kst;
  res.json["tol_sec"] = opts.scoring.tol_sec;
  res.json["groups"] = GroupReportsToJson(res.groups);
  return res;
}

PipelineConfig PipelineConfigFromJson(const std::string &json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception &e) {
    Fail(ErrorCode::kParseError, std::string("pipeline config: ") + e.what());
  }
  if (!j.is_object()) Fail(ErrorCode::kParseError, "pipeline config must be a JSON object");
  PipelineConfig cfg;
  cfg.score.groups = ParseAgeGroups("4-6,7-9,10-13");
  json corpus_keys = json::object();
  try {
    for (const auto &[key, v] : j.items()) {
      if (key == "seed") cfg.seed = v.get<uint64_t>();
      else if (key == "cmvn") cfg.cmvn = v.get<bool>();
      else if (key == "splice_context") cfg.splice_context = v.get<int>();
      else if (key == "hidden_dims") cfg.train.hidden_dims = v.get<std::vector<int>>();
      else if (key == "learning_rate") cfg.train.learning_rate = v.get<double>();
      else if (key == "momentum") cfg.train.momentum = v.get<double>();
      else if (key == "epochs") cfg.train.epochs = v.get<int>();
      else if (key == "batch_size") cfg.train.batch_size = v.get<int>();
      else if (key == "beam") cfg.decode.beam = v.get<double>();
      else if (key == "lattice_beam") cfg.decode.lattice_beam = v.get<double>();
      else if (key == "word_penalty") cfg.decode.word_penalty = v.get<double>();
      else if (key == "max_active") cfg.decode.max_active = v.get<int>();
      else if (key == "retry_beam") cfg.decode.retry_beam = v.get<double>();
      else if (key == "max_factor_len") cfg.index.max_factor_len = v.get<int>();
      else if (key == "merge_tol") cfg.index.merge_tol = v.get<double>();
      else if (key == "beta") cfg.score.scoring.beta = v.get<double>();
      else if (key == "tol_sec") cfg.score.scoring.tol_sec = v.get<double>();
      else if (key == "theta") cfg.score.theta = v.get<double>();
      else if (key == "kst") cfg.score.kst = v.get<bool>();
      else if (key == "age_groups") cfg.score.groups = ParseAgeGroups(v.get<std::string>());
      else if (key == "conditions") {
        cfg.conditions.clear();
        for (const auto &c : v) {
          PipelineCondition pc;
          for (const auto &[ck, cv] : c.items()) {
            if (ck == "name") pc.name = cv.get<std::string>();
            else if (ck == "mismatch") pc.mismatch = cv.get<double>();
            else if (ck == "noise_snr_db") {
              if (!cv.is_null()) pc.noise_snr_db = cv.get<double>();
            } else Fail(ErrorCode::kParseError, "pipeline config: unknown condition key '" + ck + "'");
          }
          if (pc.name.empty()) Fail(ErrorCode::kParseError, "pipeline config: condition without a name");
          cfg.conditions.push_back(pc);
        }
        if (cfg.conditions.empty()) Fail(ErrorCode::kParseError, "pipeline config: no conditions");
      } else {
        corpus_keys[key] = v;
      }
    }
  } catch (const json::exception &e) {
    Fail(ErrorCode::kParseError, std::string("pipeline config: ") + e.what());
  }
  cfg.corpus = CorpusSpecFromJson(corpus_keys.dump());
  return cfg;
}

PipelineConfig ReadPipelineConfig(const std::string &path) {
  return PipelineConfigFromJson(ReadFileBytes(path));
}

namespace {

std::string Join(const std::string &dir, const std::string &name) {
  return (std::filesystem::path(dir) / name).string();
}

void MakeDir(const std::string &dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) Fail(ErrorCode::kIoError, "cannot create " + dir + ": " + ec.message());
}

// CMVN and splicing, writing each stage when a directory is given.
std::vector<FeatureMatrix> Frontend(const std::vector<FeatureMatrix> &raw, const PipelineConfig &cfg,
                                    const std::string &dir, const std::string &stem) {
  std::vector<FeatureMatrix> feats = raw;
  if (cfg.cmvn) {
    feats = CmvnAll(feats);
    if (!dir.empty()) WriteArchive(feats, Join(dir, stem + ".cmvn.fea"));
  }
  feats = SpliceAll(feats, cfg.splice_context);
  if (!dir.empty()) WriteArchive(feats, Join(dir, stem + ".splice.fea"));
  return feats;
}

}  // namespace

PipelineResult RunPipeline(const PipelineConfig &cfg, int jobs, const std::string &workdir) {
  if (cfg.conditions.empty()) Fail(ErrorCode::kInvalidArgument, "pipeline needs a condition");
  if (!workdir.empty()) MakeDir(workdir);
  PipelineResult result;
  FrameClassifier model;
  json conditions = json::array();

  for (size_t ci = 0; ci < cfg.conditions.size(); ++ci) {
    const PipelineCondition &cond = cfg.conditions[ci];
    const std::string cdir = workdir.empty() ? "" : Join(workdir, cond.name);
    CorpusSpec spec = cfg.corpus;
    spec.seed = cfg.seed;
    spec.mismatch = cond.mismatch;
    spec.noise_snr_db = cond.noise_snr_db;
    const SynthCorpus corpus = GenerateCorpus(spec);
    if (!cdir.empty()) WriteCorpus(corpus, Join(cdir, "corpus"));

    if (ci == 0) {
      // The training split does not depend on the condition, so one model
      // serves all of them.
      const auto train = Frontend(corpus.train.feats, cfg, workdir, "train");
      TrainOptions topts = cfg.train;
      topts.seed = cfg.seed;
      model = TrainClassifier(train, corpus.train.labels, corpus.phones, topts, &result.train);
      if (!workdir.empty()) model.Write(Join(workdir, "model.am"));
    }

    ConditionResult cr;
    cr.condition = cond;
    const auto test = Frontend(corpus.test.feats, cfg, cdir, "test");
    const auto lats = DecodeAll(test, model, corpus.lexicon, cfg.decode, jobs);
    cr.num_lattices = static_cast<int>(lats.size());
    if (!cdir.empty()) WriteLattices(lats, Join(cdir, "lattices.txt"));
    const TimedFactorIndex index = IndexLattices(lats, cfg.index, jobs, &cr.max_cut_deviation);
    if (!cdir.empty()) WriteIndex(index, Join(cdir, "index.kwix"));
    const auto raw = SearchKeywords(index, corpus.keywords, corpus.lexicon, &cr.oov);
    if (!cdir.empty()) WriteDetections(raw, Join(cdir, "dets.raw.tsv"));

    TrialSet trials;
    trials.total_speech_sec = corpus.test.total_sec;
    trials.refs = corpus.test.refs;
    trials.meta = corpus.test.meta;
    ScoreOptions sopts = cfg.score;
    sopts.scoring.keywords = corpus.keywords;
    cr.score = ScoreDetections(raw, trials, sopts);
    if (!cdir.empty()) {
      WriteDetections(cr.score.dets, Join(cdir, "dets.tsv"));
      WriteFileBytes(Join(cdir, "score.json"), DumpJson(cr.score.json));
      WriteFileBytes(Join(cdir, "det.csv"), FormatDetCsv(cr.score.report.det_curve));
    }
    conditions.push_back({{"name", cond.name},
                          {"mismatch", cond.mismatch},
                          {"noise_snr_db", cond.noise_snr_db ? json(*cond.noise_snr_db) : json(nullptr)},
                          {"num_lattices", cr.num_lattices},
                          {"max_frame_cut_deviation", cr.max_cut_deviation},
                          {"oov_keywords", cr.oov},
                          {"score", cr.score.json}});
    result.conditions.push_back(std::move(cr));
  }

  // Per-keyword TWV of every condition against the first one.
  json stats = json::array();
  for (size_t ci = 1; ci < result.conditions.size(); ++ci) {
    std::vector<double> a, b;
    std::vector<std::string> ids;
    PairKeywordTwv(result.conditions[0].score.report, result.conditions[ci].score.report, &a, &b, &ids);
    json item = {{"a", result.conditions[0].condition.name},
                 {"b", result.conditions[ci].condition.name},
                 {"keywords", ids}};
    if (a.size() >= 2)
      item["test"] = PairedTestToJson(PairedTests(a, b));
    else
      item["test"] = nullptr;
    stats.push_back(std::move(item));
  }

  result.report = {{"schema", kReportSchema},
                   {"seed", cfg.seed},
                   {"training",
                    {{"initial_loss", result.train.initial_loss},
                     {"final_loss", result.train.final_loss},
                     {"frame_accuracy", result.train.frame_accuracy}}},
                   {"conditions", conditions},
                   {"statistics", stats}};
  if (!workdir.empty()) WriteFileBytes(Join(workdir, "report.json"), DumpJson(result.report));
  return result;
}

}  // namespace kws

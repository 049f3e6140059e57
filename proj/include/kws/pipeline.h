// include/kws/pipeline.h

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

#ifndef KWS_PIPELINE_H_
#define KWS_PIPELINE_H_

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kws/acoustic_model.h"
#include "kws/decoder.h"
#include "kws/features.h"
#include "kws/lattice_index.h"
#include "kws/scoring.h"
#include "kws/synth_corpus.h"

namespace kws {

// Batch stages. The CLI subcommands and the pipeline both go through these,
// so chained runs and pipeline runs produce the same bytes.
std::vector<FeatureMatrix> CmvnAll(const std::vector<FeatureMatrix> &feats);
std::vector<FeatureMatrix> SpliceAll(const std::vector<FeatureMatrix> &feats, int context);
std::vector<Lattice> DecodeAll(const std::vector<FeatureMatrix> &feats,
                               const FrameClassifier &model, const Lexicon &lexicon,
                               const DecodeOptions &opts, int jobs);
// Also reports the largest |frame-cut posterior sum - 1| over all lattices.
TimedFactorIndex IndexLattices(const std::vector<Lattice> &lats, const IndexOptions &opts, int jobs,
                               double *max_cut_deviation = nullptr);
std::vector<Detection> SearchKeywords(const TimedFactorIndex &index,
                                      const std::vector<std::string> &keywords,
                                      const Lexicon &lexicon, std::vector<std::string> *oov);

struct ScoreOptions {
  ScoringOptions scoring;
  double theta = 0.5;
  bool kst = true;
  std::vector<AgeGroup> groups;
};

struct ScoreResult {
  std::vector<Detection> dets;  // normalized when kst is set, decisions filled
  TwvReport report;
  std::vector<GroupReport> groups;
  nlohmann::json json;
};

ScoreResult ScoreDetections(const std::vector<Detection> &raw, const TrialSet &trials,
                            const ScoreOptions &opts);

struct PipelineCondition {
  std::string name;
  double mismatch = 0.0;
  std::optional<double> noise_snr_db;
};

struct PipelineConfig {
  uint64_t seed = 0;
  CorpusSpec corpus;
  bool cmvn = true;
  int splice_context = 4;
  TrainOptions train;
  DecodeOptions decode;
  IndexOptions index;
  ScoreOptions score;
  // Matched test data, the child-like domain and three emission noise levels.
  std::vector<PipelineCondition> conditions = {{"matched", 0.0, std::nullopt},
                                               {"child", 1.5, std::nullopt},
                                               {"snr15", 0.0, 15.0},
                                               {"snr10", 0.0, 10.0},
                                               {"snr5", 0.0, 5.0}};
};

// Flat JSON keys: every CorpusSpec key, plus cmvn, splice_context,
// hidden_dims, learning_rate, momentum, epochs, batch_size, beam,
// lattice_beam, word_penalty, max_active, retry_beam, max_factor_len, merge_tol, beta,
// tol_sec, theta, kst, age_groups ("4-6,7-9,10-13") and conditions (a list of
// {"name", "mismatch", "noise_snr_db"} objects). Unknown keys throw
// kParseError.
PipelineConfig PipelineConfigFromJson(const std::string &json_text);
PipelineConfig ReadPipelineConfig(const std::string &path);

struct ConditionResult {
  PipelineCondition condition;
  ScoreResult score;
  int num_lattices = 0;
  double max_cut_deviation = 0.0;
  std::vector<std::string> oov;
};

struct PipelineResult {
  TrainStats train;
  std::vector<ConditionResult> conditions;
  nlohmann::json report;
};

// gen-corpus -> cmvn -> splice -> train-am -> decode -> index -> search ->
// score for every condition, sharing one trained model. When `workdir` is
// non-empty every intermediate artifact is written there (see README).
PipelineResult RunPipeline(const PipelineConfig &cfg, int jobs, const std::string &workdir);

}  // namespace kws

#endif  // KWS_PIPELINE_H_

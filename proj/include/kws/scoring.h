// include/kws/scoring.h

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

#ifndef KWS_SCORING_H_
#define KWS_SCORING_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kws/lattice_index.h"

namespace kws {

struct RefOccurrence {
  std::string keyword_id;
  std::string utt_id;
  double start = 0.0;
  double end = 0.0;
  bool operator==(const RefOccurrence &other) const = default;
};

struct SpeakerInfo {
  std::string speaker_id;
  std::optional<double> age;       // years
  std::optional<double> duration;  // seconds of speech in the utterance
};

struct TrialSet {
  double total_speech_sec = 0.0;
  std::vector<RefOccurrence> refs;
  std::map<std::string, SpeakerInfo> meta;  // by utt_id
};

// TSV `keyword_id utt_id start_sec end_sec`.
std::vector<RefOccurrence> ReadRefs(const std::string &path);
void WriteRefs(const std::vector<RefOccurrence> &refs, const std::string &path);
// TSV `utt_id speaker_id age [duration_sec]`; age may be `-` or `NA`.
std::map<std::string, SpeakerInfo> ReadSpeakerMeta(const std::string &path);
void WriteSpeakerMeta(const std::map<std::string, SpeakerInfo> &meta, const std::string &path);

struct AlignmentResult {
  std::vector<int> det_to_ref;  // matched reference index or -1, per detection
  int hits = 0;
  int misses = 0;
  int false_alarms = 0;
};

// Greedy one-to-one matching, detections visited by descending score: a
// detection takes the unmatched reference of the same keyword and utterance
// whose midpoint is nearest (within tol_sec), ties going to the earliest
// reference. Decisions are ignored; every detection takes part.
AlignmentResult AlignDetections(const std::vector<Detection> &dets,
                                const std::vector<RefOccurrence> &refs, double tol_sec = 0.5);

struct KeywordTwv {
  std::string keyword_id;
  int n_true = 0;
  int n_hit = 0;
  int n_fa = 0;
  double p_miss = 0.0;
  double p_fa = 0.0;
  double twv = 0.0;
};

struct DetPoint {
  double theta = 0.0;
  double p_fa = 0.0;
  double p_miss = 0.0;
  double twv = 0.0;
};

struct TwvReport {
  double beta = 999.9;
  double theta = 0.5;
  double total_speech_sec = 0.0;
  std::vector<KeywordTwv> keywords;            // N_true > 0, sorted by id
  std::vector<std::string> excluded_keywords;  // N_true == 0
  // Keyword averages at theta.
  double atwv = 0.0;
  double p_fa_avg = 0.0;
  double p_miss_avg = 0.0;
  double mtwv = 0.0;
  double mtwv_threshold = 1.0;
  std::vector<DetPoint> det_curve;
};

struct ScoringOptions {
  double beta = 999.9;
  double tol_sec = 0.5;
  // Extra keyword ids to account for (e.g. searched keywords without refs).
  std::vector<std::string> keywords;
};

// Decisions are score >= theta. Also fills the MTWV sweep fields. Throws
// kNoScoreableKeywords when no keyword has a reference.
TwvReport ComputeTwv(const std::vector<Detection> &dets, const TrialSet &trials, double theta,
                     const ScoringOptions &opts = {});

struct MtwvResult {
  double mtwv = 0.0;
  double theta_star = 1.0;
  std::vector<DetPoint> det_curve;  // ascending theta
};

// Sweeps theta over the distinct detection scores plus 0 and 1; theta_star is
// the smallest maximizing threshold. With no detections the result is
// (0, theta = 1).
MtwvResult SweepMtwv(const std::vector<Detection> &dets, const TrialSet &trials,
                     const ScoringOptions &opts = {});

// Keyword-specific thresholding. Per keyword, with N = sum of raw scores and
// T = total speech, thr = N / (T / beta + (beta - 1) / beta * N) (at most 1);
// scores map piecewise linearly with 0 -> 0, thr -> 0.5, 1 -> 1. Decisions are
// set to normalized >= 0.5.
double KstThreshold(double n_est, double total_speech_sec, double beta);
double KstMap(double raw, double thr);
std::vector<Detection> KstNormalize(const std::vector<Detection> &dets, const TrialSet &trials,
                                    double beta = 999.9);

struct PairedTestResult {
  int n = 0;
  double mean_diff = 0.0;
  std::optional<double> t_stat;  // empty when the differences are a nonzero constant
  double t_pvalue = 1.0;
  bool degenerate_direction = false;
  int wilcoxon_n = 0;  // pairs left after dropping zero differences
  double wilcoxon_stat = 0.0;
  double wilcoxon_pvalue = 1.0;
  bool wilcoxon_exact = false;
};

// Two-sided paired t-test on a - b (Student t, n - 1 df) and Wilcoxon
// signed-rank with zero differences dropped and average ranks for ties; the
// statistic is min(W+, W-). n_eff >= 10 uses the tie-corrected normal
// approximation with continuity correction, smaller n the exact null
// distribution. Throws kLengthMismatch, or kInvalidArgument when n < 2.
PairedTestResult PairedTests(const std::vector<double> &a, const std::vector<double> &b);

struct AgeGroup {
  std::string label;
  double age_min = 0.0;  // inclusive
  double age_max = 0.0;  // inclusive
};

struct GroupReport {
  AgeGroup group;
  bool empty = false;  // no utterance falls in the group
  int num_utts = 0;
  std::optional<TwvReport> report;  // absent when empty or nothing scoreable
};

// Partitions utterances by speaker age and scores each group on its own,
// with total speech recomputed from the per-utterance durations. A group that
// covers every utterance uses the trial total unchanged.
std::vector<GroupReport> ComputeGroupReports(const std::vector<Detection> &dets,
                                             const TrialSet &trials,
                                             const std::vector<AgeGroup> &groups, double theta,
                                             const ScoringOptions &opts = {});

// Parses "4-6,7-9,10-13" into groups labelled by their range text.
std::vector<AgeGroup> ParseAgeGroups(const std::string &spec);

// CSV `theta,pfa,pmiss,twv` with a header line.
std::string FormatDetCsv(const std::vector<DetPoint> &curve);

}  // namespace kws

#endif  // KWS_SCORING_H_

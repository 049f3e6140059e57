// src/scoring.cc

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

#include "kws/scoring.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "bytes.h"
#include "kws/error.h"
#include "kws/util.h"

namespace kws {

std::vector<RefOccurrence> ReadRefs(const std::string &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorCode::kNotFound, path);
  std::vector<RefOccurrence> refs;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto f = SplitFields(line);
    if (f.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (f.size() != 4) Fail(ErrorCode::kParseError, where + ": expected 4 fields");
    RefOccurrence r{f[0], f[1], ParseDouble(f[2], where), ParseDouble(f[3], where)};
    if (!(r.end > r.start)) Fail(ErrorCode::kParseError, where + ": end must exceed start");
    refs.push_back(std::move(r));
  }
  return refs;
}

void WriteRefs(const std::vector<RefOccurrence> &refs, const std::string &path) {
  std::string out;
  for (const auto &r : refs)
    out += r.keyword_id + "\t" + r.utt_id + "\t" + FormatDouble(r.start) + "\t" +
           FormatDouble(r.end) + "\n";
  WriteFileBytes(path, out);
}

std::map<std::string, SpeakerInfo> ReadSpeakerMeta(const std::string &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorCode::kNotFound, path);
  std::map<std::string, SpeakerInfo> meta;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto f = SplitFields(line);
    if (f.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (f.size() < 2 || f.size() > 4) Fail(ErrorCode::kParseError, where + ": expected 2 to 4 fields");
    SpeakerInfo info;
    info.speaker_id = f[1];
    if (f.size() >= 3 && f[2] != "-" && f[2] != "NA") info.age = ParseDouble(f[2], where);
    if (f.size() == 4 && f[3] != "-" && f[3] != "NA") info.duration = ParseDouble(f[3], where);
    if (!meta.emplace(f[0], info).second)
      Fail(ErrorCode::kDuplicateUttId, where + ": utterance '" + f[0] + "' repeated");
  }
  return meta;
}

void WriteSpeakerMeta(const std::map<std::string, SpeakerInfo> &meta, const std::string &path) {
  std::string out;
  for (const auto &[utt, info] : meta) {
    out += utt + "\t" + info.speaker_id + "\t" + (info.age ? FormatDouble(*info.age) : "-");
    if (info.duration) out += "\t" + FormatDouble(*info.duration);
    out += "\n";
  }
  WriteFileBytes(path, out);
}

AlignmentResult AlignDetections(const std::vector<Detection> &dets,
                                const std::vector<RefOccurrence> &refs, double tol_sec) {
  AlignmentResult res;
  res.det_to_ref.assign(dets.size(), -1);
  std::map<std::pair<std::string, std::string>, std::vector<int>> refs_by;
  for (size_t i = 0; i < refs.size(); ++i)
    refs_by[{refs[i].keyword_id, refs[i].utt_id}].push_back(static_cast<int>(i));
  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto &x = dets[a];
    const auto &y = dets[b];
    if (x.score != y.score) return x.score > y.score;
    return std::tie(x.keyword_id, x.utt_id, x.start, x.end) <
           std::tie(y.keyword_id, y.utt_id, y.start, y.end);
  });
  std::vector<char> taken(refs.size(), 0);
  for (int di : order) {
    const auto &d = dets[di];
    auto it = refs_by.find({d.keyword_id, d.utt_id});
    if (it == refs_by.end()) continue;
    const double dmid = 0.5 * (d.start + d.end);
    int best = -1;
    double best_dist = 0.0;
    for (int ri : it->second) {
      if (taken[ri]) continue;
      const auto &r = refs[ri];
      const double dist = std::abs(0.5 * (r.start + r.end) - dmid);
      if (dist > tol_sec) continue;
      if (best < 0 || dist < best_dist ||
          (dist == best_dist && std::tie(r.start, r.end) < std::tie(refs[best].start, refs[best].end))) {
        best = ri;
        best_dist = dist;
      }
    }
    if (best >= 0) {
      taken[best] = 1;
      res.det_to_ref[di] = best;
    }
  }
  for (size_t i = 0; i < dets.size(); ++i) (res.det_to_ref[i] >= 0 ? res.hits : res.false_alarms)++;
  res.misses = static_cast<int>(refs.size()) - res.hits;
  return res;
}

namespace {

// Per-keyword scores of aligned (hit) and unaligned (false alarm) detections,
// sorted descending, so counts at any threshold are prefix lengths.
struct KeywordCounts {
  int n_true = 0;
  std::vector<double> hit_scores;
  std::vector<double> fa_scores;
};

struct CountTable {
  std::map<std::string, KeywordCounts> scored;
  std::vector<std::string> excluded;
};

CountTable BuildCounts(const std::vector<Detection> &dets, const TrialSet &trials,
                       const ScoringOptions &opts) {
  const AlignmentResult align = AlignDetections(dets, trials.refs, opts.tol_sec);
  std::map<std::string, KeywordCounts> all;
  for (const auto &k : opts.keywords) all[k];
  for (const auto &r : trials.refs) all[r.keyword_id].n_true++;
  for (size_t i = 0; i < dets.size(); ++i) {
    auto &c = all[dets[i].keyword_id];
    (align.det_to_ref[i] >= 0 ? c.hit_scores : c.fa_scores).push_back(dets[i].score);
  }
  CountTable table;
  for (auto &[kw, c] : all) {
    if (c.n_true == 0) {
      table.excluded.push_back(kw);
      continue;
    }
    std::sort(c.hit_scores.begin(), c.hit_scores.end(), std::greater<>());
    std::sort(c.fa_scores.begin(), c.fa_scores.end(), std::greater<>());
    table.scored.emplace(kw, std::move(c));
  }
  if (table.scored.empty()) Fail(ErrorCode::kNoScoreableKeywords, "no keyword has a reference");
  return table;
}

int CountAtLeast(const std::vector<double> &desc, double theta) {
  // desc is sorted descending; count elements >= theta.
  return static_cast<int>(std::partition_point(desc.begin(), desc.end(),
                                               [&](double s) { return s >= theta; }) -
                          desc.begin());
}

struct Aggregate {
  double twv = 0.0;
  double p_fa = 0.0;
  double p_miss = 0.0;
  std::vector<KeywordTwv> keywords;
};

// Sole TWV computation; the report and the sweep both call it.
Aggregate TwvAt(const CountTable &table, double theta, double total, double beta,
                bool per_keyword) {
  Aggregate agg;
  for (const auto &[kw, c] : table.scored) {
    KeywordTwv k;
    k.keyword_id = kw;
    k.n_true = c.n_true;
    k.n_hit = CountAtLeast(c.hit_scores, theta);
    k.n_fa = CountAtLeast(c.fa_scores, theta);
    const double trials = total - c.n_true;
    if (!(trials > 0.0))
      Fail(ErrorCode::kInvalidArgument, "total speech must exceed the reference count of " + kw);
    k.p_miss = 1.0 - static_cast<double>(k.n_hit) / c.n_true;
    k.p_fa = k.n_fa / trials;
    k.twv = 1.0 - k.p_miss - beta * k.p_fa;
    agg.twv += k.twv;
    agg.p_fa += k.p_fa;
    agg.p_miss += k.p_miss;
    if (per_keyword) agg.keywords.push_back(std::move(k));
  }
  const double n = static_cast<double>(table.scored.size());
  agg.twv /= n;
  agg.p_fa /= n;
  agg.p_miss /= n;
  return agg;
}

MtwvResult Sweep(const CountTable &table, const std::vector<Detection> &dets, double total,
                 double beta) {
  MtwvResult res;
  if (dets.empty()) {
    const Aggregate agg = TwvAt(table, 1.0, total, beta, false);
    res.mtwv = agg.twv;
    res.theta_star = 1.0;
    res.det_curve.push_back({1.0, agg.p_fa, agg.p_miss, agg.twv});
    return res;
  }
  std::vector<double> thresholds = {0.0, 1.0};
  for (const auto &d : dets) thresholds.push_back(d.score);
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  bool first = true;
  for (double theta : thresholds) {
    const Aggregate agg = TwvAt(table, theta, total, beta, false);
    res.det_curve.push_back({theta, agg.p_fa, agg.p_miss, agg.twv});
    if (first || agg.twv > res.mtwv) {
      res.mtwv = agg.twv;
      res.theta_star = theta;
      first = false;
    }
  }
  return res;
}

}  // namespace

MtwvResult SweepMtwv(const std::vector<Detection> &dets, const TrialSet &trials,
                     const ScoringOptions &opts) {
  return Sweep(BuildCounts(dets, trials, opts), dets, trials.total_speech_sec, opts.beta);
}

TwvReport ComputeTwv(const std::vector<Detection> &dets, const TrialSet &trials, double theta,
                     const ScoringOptions &opts) {
  const CountTable table = BuildCounts(dets, trials, opts);
  Aggregate agg = TwvAt(table, theta, trials.total_speech_sec, opts.beta, true);
  TwvReport rep;
  rep.beta = opts.beta;
  rep.theta = theta;
  rep.total_speech_sec = trials.total_speech_sec;
  rep.keywords = std::move(agg.keywords);
  rep.excluded_keywords = table.excluded;
  rep.atwv = agg.twv;
  rep.p_fa_avg = agg.p_fa;
  rep.p_miss_avg = agg.p_miss;
  MtwvResult sweep = Sweep(table, dets, trials.total_speech_sec, opts.beta);
  rep.mtwv = sweep.mtwv;
  rep.mtwv_threshold = sweep.theta_star;
  rep.det_curve = std::move(sweep.det_curve);
  return rep;
}

double KstThreshold(double n_est, double total_speech_sec, double beta) {
  const double denom = total_speech_sec / beta + (beta - 1.0) / beta * n_est;
  if (!(denom > 0.0)) return 1.0;
  return std::min(1.0, n_est / denom);
}

double KstMap(double raw, double thr) {
  if (thr <= 0.0) return raw > 0.0 ? 0.5 + 0.5 * raw : 0.0;
  if (raw <= thr) return 0.5 * raw / thr;
  if (thr >= 1.0) return 1.0;
  return 0.5 + 0.5 * (raw - thr) / (1.0 - thr);
}

std::vector<Detection> KstNormalize(const std::vector<Detection> &dets, const TrialSet &trials,
                                    double beta) {
  std::map<std::string, double> n_est;
  for (const auto &d : dets) n_est[d.keyword_id] += d.score;
  std::vector<Detection> out = dets;
  for (auto &d : out) {
    const double thr = KstThreshold(n_est[d.keyword_id], trials.total_speech_sec, beta);
    d.score = KstMap(d.score, thr);
    d.decision = d.score >= 0.5;
  }
  return out;
}

namespace {

double NormalTwoSided(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

}  // namespace

PairedTestResult PairedTests(const std::vector<double> &a, const std::vector<double> &b) {
  if (a.size() != b.size())
    Fail(ErrorCode::kLengthMismatch, "paired vectors have lengths " + std::to_string(a.size()) +
                                         " and " + std::to_string(b.size()));
  if (a.size() < 2) Fail(ErrorCode::kInvalidArgument, "paired tests need at least 2 pairs");
  PairedTestResult r;
  r.n = static_cast<int>(a.size());
  std::vector<double> d(a.size());
  for (size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];

  // t-test.
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / r.n;
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (r.n - 1));
  r.mean_diff = mean;
  const bool all_zero = std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; });
  if (all_zero) {
    r.t_stat = 0.0;
    r.t_pvalue = 1.0;
  } else if (sd == 0.0) {
    r.degenerate_direction = true;
    r.t_pvalue = 0.0;
  } else {
    const double t = mean / (sd / std::sqrt(static_cast<double>(r.n)));
    r.t_stat = t;
    boost::math::students_t_distribution<double> dist(r.n - 1);
    r.t_pvalue = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  }

  // Wilcoxon signed-rank.
  std::vector<double> nz;
  for (double x : d)
    if (x != 0.0) nz.push_back(x);
  const int n = static_cast<int>(nz.size());
  r.wilcoxon_n = n;
  if (n == 0) {
    r.wilcoxon_stat = 0.0;
    r.wilcoxon_pvalue = 1.0;
    return r;
  }
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int x, int y) { return std::abs(nz[x]) < std::abs(nz[y]); });
  std::vector<double> rank(n);
  double tie_term = 0.0;
  for (int i = 0; i < n;) {
    int j = i;
    while (j + 1 < n && std::abs(nz[idx[j + 1]]) == std::abs(nz[idx[i]])) ++j;
    const double avg = 0.5 * (i + j) + 1.0;
    for (int k = i; k <= j; ++k) rank[idx[k]] = avg;
    const double t = j - i + 1;
    tie_term += t * t * t - t;
    i = j + 1;
  }
  double w_plus = 0.0, w_minus = 0.0;
  for (int i = 0; i < n; ++i) (nz[i] > 0 ? w_plus : w_minus) += rank[i];
  r.wilcoxon_stat = std::min(w_plus, w_minus);

  if (n >= 10) {
    const double mu = n * (n + 1) / 4.0;
    const double var = n * (n + 1) * (2.0 * n + 1) / 24.0 - tie_term / 48.0;
    double diff = r.wilcoxon_stat - mu;
    // Continuity correction toward the mean.
    if (diff != 0.0) diff -= 0.5 * (diff > 0 ? 1.0 : -1.0);
    r.wilcoxon_pvalue = var > 0.0 ? std::min(1.0, NormalTwoSided(diff / std::sqrt(var))) : 1.0;
  } else {
    // Exact null: all 2^n sign assignments of the observed ranks.
    r.wilcoxon_exact = true;
    const uint32_t patterns = 1u << n;
    uint32_t at_most = 0;
    for (uint32_t mask = 0; mask < patterns; ++mask) {
      double w = 0.0;
      for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) w += rank[i];
      if (w <= r.wilcoxon_stat + 1e-9) ++at_most;
    }
    r.wilcoxon_pvalue = std::min(1.0, 2.0 * at_most / static_cast<double>(patterns));
  }
  return r;
}

std::vector<GroupReport> ComputeGroupReports(const std::vector<Detection> &dets,
                                             const TrialSet &trials,
                                             const std::vector<AgeGroup> &groups, double theta,
                                             const ScoringOptions &opts) {
  std::vector<GroupReport> out;
  for (const auto &g : groups) {
    GroupReport gr;
    gr.group = g;
    std::set<std::string> utts;
    double duration = 0.0;
    bool have_durations = true;
    for (const auto &[utt, info] : trials.meta) {
      if (!info.age || *info.age < g.age_min || *info.age > g.age_max) continue;
      utts.insert(utt);
      if (info.duration)
        duration += *info.duration;
      else
        have_durations = false;
    }
    gr.num_utts = static_cast<int>(utts.size());
    if (utts.empty()) {
      gr.empty = true;
      out.push_back(std::move(gr));
      continue;
    }
    TrialSet sub;
    if (utts.size() == trials.meta.size()) {
      sub.total_speech_sec = trials.total_speech_sec;
    } else {
      if (!have_durations)
        Fail(ErrorCode::kInvalidArgument,
             "group '" + g.label + "' needs per-utterance durations in the metadata");
      sub.total_speech_sec = duration;
    }
    for (const auto &r : trials.refs)
      if (utts.count(r.utt_id)) sub.refs.push_back(r);
    std::vector<Detection> sub_dets;
    for (const auto &d : dets)
      if (utts.count(d.utt_id)) sub_dets.push_back(d);
    for (const auto &u : utts) sub.meta.emplace(u, trials.meta.at(u));
    try {
      gr.report = ComputeTwv(sub_dets, sub, theta, opts);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kNoScoreableKeywords) throw;
    }
    out.push_back(std::move(gr));
  }
  return out;
}

std::vector<AgeGroup> ParseAgeGroups(const std::string &spec) {
  std::vector<AgeGroup> groups;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const size_t dash = item.find('-', 1);
    if (dash == std::string::npos)
      Fail(ErrorCode::kParseError, "age group '" + item + "' must look like MIN-MAX");
    AgeGroup g;
    g.label = item;
    g.age_min = ParseDouble(item.substr(0, dash), "age group");
    g.age_max = ParseDouble(item.substr(dash + 1), "age group");
    if (g.age_max < g.age_min) Fail(ErrorCode::kParseError, "age group '" + item + "' is empty");
    groups.push_back(g);
  }
  return groups;
}

std::string FormatDetCsv(const std::vector<DetPoint> &curve) {
  std::string out = "theta,pfa,pmiss,twv\n";
  for (const auto &p : curve)
    out += FormatDouble(p.theta) + "," + FormatDouble(p.p_fa) + "," + FormatDouble(p.p_miss) + "," +
           FormatDouble(p.twv) + "\n";
  return out;
}

}  // namespace kws

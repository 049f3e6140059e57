// tests/scoring_test.cc

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

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <array>
#include <map>
#include <set>

#include "kws/scoring.h"
#include "test_util.h"

namespace kws {
namespace {

using testing::CodeOf;
using testing::Gen;

Detection Det(const std::string &kw, const std::string &utt, double s, double e, double score) {
  Detection d;
  d.keyword_id = kw;
  d.utt_id = utt;
  d.start = s;
  d.end = e;
  d.score = score;
  return d;
}

// Two keywords over 100 s: A has two references, one found; B has one
// reference, found, plus a false alarm.
struct HandCase {
  std::vector<Detection> dets = {Det("A", "u1", 1.0, 1.5, 0.9), Det("B", "u2", 4.0, 4.4, 0.8),
                                 Det("B", "u3", 7.0, 7.3, 0.6)};
  TrialSet trials;
  HandCase() {
    trials.total_speech_sec = 100.0;
    trials.refs = {{"A", "u1", 1.1, 1.5}, {"A", "u4", 2.0, 2.5}, {"B", "u2", 4.0, 4.5}};
  }
};

TEST(TwvTest, HandExample) {
  const HandCase hc;
  // Hand arithmetic: TWV(A) = 1 - 1/2 = 0.5; P_fa(B) = 1/99; TWV(B) = 1 - 999.9/99.
  const double twv_b = 1.0 - 999.9 / 99.0;
  ASSERT_NEAR(twv_b, -9.1, 1e-12);
  const double atwv = (0.5 + twv_b) / 2.0;
  ASSERT_NEAR(atwv, -4.3, 1e-12);

  const TwvReport r = ComputeTwv(hc.dets, hc.trials, 0.5);
  EXPECT_NEAR(r.atwv, -4.3, 1e-9);
  ASSERT_EQ(r.keywords.size(), 2u);
  EXPECT_EQ(r.keywords[0].keyword_id, "A");
  EXPECT_EQ(r.keywords[0].n_true, 2);
  EXPECT_EQ(r.keywords[0].n_hit, 1);
  EXPECT_EQ(r.keywords[0].n_fa, 0);
  EXPECT_NEAR(r.keywords[0].twv, 0.5, 1e-12);
  EXPECT_EQ(r.keywords[1].n_fa, 1);
  EXPECT_NEAR(r.keywords[1].p_fa, 1.0 / 99.0, 1e-15);
  EXPECT_NEAR(r.keywords[1].p_fa, 0.010101, 1e-6);
  EXPECT_NEAR(r.keywords[1].twv, -9.1, 1e-9);
  EXPECT_NEAR(r.p_miss_avg, 0.25, 1e-12);
  // Dropping the false alarm (theta above 0.6) gives (0.5 + 1) / 2.
  EXPECT_NEAR(r.mtwv, 0.75, 1e-12);
  EXPECT_DOUBLE_EQ(r.mtwv_threshold, 0.8);
}

TEST(TwvTest, PerfectAndEmpty) {
  const HandCase hc;
  std::vector<Detection> perfect;
  for (const auto &r : hc.trials.refs) perfect.push_back(Det(r.keyword_id, r.utt_id, r.start, r.end, 1.0));
  EXPECT_DOUBLE_EQ(ComputeTwv(perfect, hc.trials, 0.5).atwv, 1.0);
  const TwvReport none = ComputeTwv({}, hc.trials, 0.5);
  EXPECT_DOUBLE_EQ(none.atwv, 0.0);
  for (const auto &k : none.keywords) EXPECT_DOUBLE_EQ(k.twv, 0.0);
  EXPECT_DOUBLE_EQ(none.mtwv, 0.0);
  EXPECT_DOUBLE_EQ(none.mtwv_threshold, 1.0);
}

TEST(TwvTest, ExcludedAndUnscoreable) {
  const HandCase hc;
  ScoringOptions opts;
  opts.keywords = {"A", "B", "ZERO"};
  std::vector<Detection> dets = hc.dets;
  dets.push_back(Det("ZERO", "u1", 3.0, 3.5, 0.9));
  const TwvReport r = ComputeTwv(dets, hc.trials, 0.5, opts);
  EXPECT_EQ(r.excluded_keywords, std::vector<std::string>{"ZERO"});
  EXPECT_NEAR(r.atwv, -4.3, 1e-9);
  TrialSet empty;
  empty.total_speech_sec = 10.0;
  EXPECT_EQ(CodeOf([&] { ComputeTwv(hc.dets, empty, 0.5); }), ErrorCode::kNoScoreableKeywords);
}

TEST(AlignTest, WindowAndOneToOne) {
  const std::vector<RefOccurrence> refs = {{"A", "u", 1.0, 2.0}};
  AlignmentResult a = AlignDetections({Det("A", "u", 1.0, 2.0, 0.5)}, refs);
  EXPECT_EQ(a.hits, 1);
  EXPECT_EQ(a.misses, 0);
  EXPECT_EQ(a.false_alarms, 0);
  a = AlignDetections({Det("A", "u", 1.0, 2.0, 0.5), Det("A", "u", 1.1, 2.1, 0.9)}, refs);
  EXPECT_EQ(a.hits, 1);
  EXPECT_EQ(a.false_alarms, 1);
  EXPECT_EQ(a.det_to_ref, (std::vector<int>{-1, 0}));  // higher score goes first
  a = AlignDetections({Det("A", "u", 1.6, 2.6, 0.5)}, refs);  // midpoints 0.6 s apart
  EXPECT_EQ(a.hits, 0);
  EXPECT_EQ(a.misses, 1);
  EXPECT_EQ(a.false_alarms, 1);
  a = AlignDetections({Det("A", "v", 1.0, 2.0, 0.5), Det("B", "u", 1.0, 2.0, 0.5)}, refs);
  EXPECT_EQ(a.hits, 0);
  EXPECT_EQ(a.false_alarms, 2);
  // Nearest reference wins; equal distances go to the earlier one.
  const std::vector<RefOccurrence> two = {{"A", "u", 1.0, 1.2}, {"A", "u", 1.4, 1.6}};
  EXPECT_EQ(AlignDetections({Det("A", "u", 1.25, 1.35, 0.5)}, two).det_to_ref, std::vector<int>{0});
  EXPECT_EQ(AlignDetections({Det("A", "u", 1.3, 1.45, 0.5)}, two).det_to_ref, std::vector<int>{1});
}

// Independent scorer: greedy alignment by descending score, then TWV from the
// detections at or above theta.
double OracleAtwv(const std::vector<Detection> &dets, const TrialSet &trials, double theta, double beta,
                  double tol) {
  std::vector<size_t> order(dets.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t x, size_t y) {
    if (dets[x].score != dets[y].score) return dets[x].score > dets[y].score;
    return std::tie(dets[x].keyword_id, dets[x].utt_id, dets[x].start, dets[x].end) <
           std::tie(dets[y].keyword_id, dets[y].utt_id, dets[y].start, dets[y].end);
  });
  std::vector<bool> used(trials.refs.size(), false), hit(dets.size(), false);
  for (size_t i : order) {
    int best = -1;
    double bd = 0.0;
    for (size_t r = 0; r < trials.refs.size(); ++r) {
      const auto &ref = trials.refs[r];
      if (used[r] || ref.keyword_id != dets[i].keyword_id || ref.utt_id != dets[i].utt_id) continue;
      const double dist = std::abs((ref.start + ref.end) / 2 - (dets[i].start + dets[i].end) / 2);
      if (dist <= tol && (best < 0 || dist < bd)) {
        best = static_cast<int>(r);
        bd = dist;
      }
    }
    if (best >= 0) {
      used[best] = true;
      hit[i] = true;
    }
  }
  std::map<std::string, std::array<int, 3>> c;  // true, hit, fa
  for (const auto &r : trials.refs) c[r.keyword_id][0]++;
  for (size_t i = 0; i < dets.size(); ++i)
    if (dets[i].score >= theta && c.count(dets[i].keyword_id)) c[dets[i].keyword_id][hit[i] ? 1 : 2]++;
  double sum = 0.0;
  for (const auto &[kw, v] : c)
    sum += 1.0 - (1.0 - static_cast<double>(v[1]) / v[0]) - beta * v[2] / (trials.total_speech_sec - v[0]);
  return sum / c.size();
}

struct RandomCase {
  std::vector<Detection> dets;
  TrialSet trials;
};

// References have distinct start times per (keyword, utterance).
RandomCase MakeRandomCase(Gen &g) {
  RandomCase rc;
  const std::vector<std::string> kws = {"ONE", "TWO", "THREE", "FOUR"};
  rc.trials.total_speech_sec = g.Uniform(200.0, 2000.0);
  for (int u = 0; u < 6; ++u) {
    const std::string utt = "utt" + std::to_string(u);
    const double ages[] = {4, 6, 7, 9, 10, 13};
    rc.trials.meta[utt] = {"spk" + std::to_string(u), ages[u], 30.0};
    for (const auto &kw : kws) {
      double t = g.Uniform(0.0, 1.0);
      for (int i = 0, n = g.Int(0, 2); i < n; ++i, t += g.Uniform(1.5, 3.0))
        rc.trials.refs.push_back({kw, utt, t, t + 0.4});
    }
    for (int i = 0, n = g.Int(0, 8); i < n; ++i) {
      const double s = g.Uniform(0.0, 8.0);
      // Scores on a coarse grid to exercise ties in the sweep.
      rc.dets.push_back(Det(kws[g.Int(0, 3)], utt, s, s + 0.4, g.Int(1, 20) / 20.0));
    }
  }
  if (rc.trials.refs.empty()) rc.trials.refs.push_back({"ONE", "utt0", 1.0, 1.5});
  return rc;
}

TEST(TwvTest, MatchesOracleAndSweepProperties) {
  Gen g(42);
  for (int trial = 0; trial < 300; ++trial) {
    const RandomCase rc = MakeRandomCase(g);
    const double beta = trial % 2 ? 999.9 : g.Uniform(1.0, 50.0);
    ScoringOptions opts;
    opts.beta = beta;
    const double theta = g.Uniform(0.0, 1.0);
    const TwvReport r = ComputeTwv(rc.dets, rc.trials, theta, opts);
    ASSERT_NEAR(r.atwv, OracleAtwv(rc.dets, rc.trials, theta, beta, 0.5), 1e-9) << trial;
    ASSERT_LE(r.atwv, 1.0);
    ASSERT_GE(r.mtwv, r.atwv - 1e-12);
    // The sweep maximum is attained exactly at theta_star, and no candidate
    // threshold does better according to the oracle.
    ASSERT_EQ(ComputeTwv(rc.dets, rc.trials, r.mtwv_threshold, opts).atwv, r.mtwv);
    std::set<double> cands = {0.0, 1.0};
    for (const auto &d : rc.dets) cands.insert(d.score);
    double best = -1e300, best_theta = 2.0;
    for (double c : cands) {
      const double v = OracleAtwv(rc.dets, rc.trials, c, beta, 0.5);
      if (v > best + 1e-12) {
        best = v;
        best_theta = c;
      }
    }
    ASSERT_NEAR(r.mtwv, best, 1e-9);
    ASSERT_DOUBLE_EQ(r.mtwv_threshold, best_theta);
    for (const auto &k : r.keywords) {
      ASSERT_GE(k.p_miss, 0.0);
      ASSERT_LE(k.p_miss, 1.0);
      ASSERT_GE(k.p_fa, 0.0);
      ASSERT_LE(k.p_fa, 1.0);
    }
  }
}

TEST(TwvTest, MonotoneRescalingInvariance) {
  Gen g(43);
  for (int trial = 0; trial < 100; ++trial) {
    RandomCase rc = MakeRandomCase(g);
    const double theta = g.Uniform(0.05, 0.95);
    const double before = ComputeTwv(rc.dets, rc.trials, theta).atwv;
    for (auto &d : rc.dets) d.score = std::pow(d.score, 3.0);
    ASSERT_EQ(ComputeTwv(rc.dets, rc.trials, std::pow(theta, 3.0)).atwv, before);
  }
}

TEST(SweepTest, SingleHitAndEmpty) {
  TrialSet t;
  t.total_speech_sec = 50.0;
  t.refs = {{"A", "u", 1.0, 1.5}};
  const MtwvResult m = SweepMtwv({Det("A", "u", 1.0, 1.5, 0.7)}, t);
  EXPECT_DOUBLE_EQ(m.mtwv, 1.0);
  EXPECT_DOUBLE_EQ(m.theta_star, 0.0);
  ASSERT_EQ(m.det_curve.size(), 3u);
  EXPECT_DOUBLE_EQ(m.det_curve[1].theta, 0.7);
  EXPECT_DOUBLE_EQ(m.det_curve[1].twv, 1.0);
  EXPECT_DOUBLE_EQ(m.det_curve[2].twv, 0.0);
  const MtwvResult e = SweepMtwv({}, t);
  EXPECT_DOUBLE_EQ(e.mtwv, 0.0);
  EXPECT_DOUBLE_EQ(e.theta_star, 1.0);
  EXPECT_EQ(FormatDetCsv(m.det_curve).substr(0, 20), "theta,pfa,pmiss,twv\n");
}

TEST(KstTest, ThresholdHandValue) {
  const double beta = 999.9;
  const double direct = 1.0 / (100.0 / beta + (beta - 1.0) / beta * 1.0);
  EXPECT_NEAR(direct, 0.9099, 1e-4);
  EXPECT_NEAR(KstThreshold(1.0, 100.0, beta), direct, 1e-15);
  EXPECT_DOUBLE_EQ(KstThreshold(1000.0, 10.0, beta), 1.0);  // capped
  EXPECT_DOUBLE_EQ(KstMap(0.37, 0.37), 0.5);
  EXPECT_DOUBLE_EQ(KstMap(0.0, 0.37), 0.0);
  EXPECT_DOUBLE_EQ(KstMap(1.0, 0.37), 1.0);
}

TEST(KstTest, MonotoneAndRankPreserving) {
  Gen g(44);
  for (int trial = 0; trial < 200; ++trial) {
    const double thr = g.Uniform(0.0, 1.0);
    const double x = g.Uniform(0.0, 1.0), y = g.Uniform(0.0, 1.0);
    if (x < y) ASSERT_LE(KstMap(x, thr), KstMap(y, thr));
    ASSERT_GE(KstMap(x, thr), 0.0);
    ASSERT_LE(KstMap(x, thr), 1.0);
  }
  for (int trial = 0; trial < 100; ++trial) {
    const RandomCase rc = MakeRandomCase(g);
    const auto norm = KstNormalize(rc.dets, rc.trials);
    ASSERT_EQ(norm.size(), rc.dets.size());
    for (size_t i = 0; i < norm.size(); ++i) {
      ASSERT_EQ(norm[i].decision, norm[i].score >= 0.5);
      for (size_t j = 0; j < norm.size(); ++j)
        if (rc.dets[i].keyword_id == rc.dets[j].keyword_id && rc.dets[i].score < rc.dets[j].score)
          ASSERT_LE(norm[i].score, norm[j].score);
    }
  }
}

TEST(PairedTestsTest, MatchesReferenceImplementation) {
  const auto ref = nlohmann::json::parse(testing::Slurp(KWS_TEST_DATA_DIR "/stats_reference.json"));
  ASSERT_EQ(ref.at("pairs").size(), 10u);
  for (const auto &p : ref.at("pairs")) {
    const auto a = p.at("a").get<std::vector<double>>();
    const auto b = p.at("b").get<std::vector<double>>();
    const PairedTestResult r = PairedTests(a, b);
    ASSERT_TRUE(r.t_stat.has_value());
    EXPECT_NEAR(*r.t_stat, p.at("t_stat").get<double>(), 1e-6) << a.size();
    EXPECT_NEAR(r.t_pvalue, p.at("t_pvalue").get<double>(), 1e-6) << a.size();
    EXPECT_EQ(r.wilcoxon_n, p.at("n_eff").get<int>());
    EXPECT_EQ(r.wilcoxon_exact, p.at("method") == "exact");
    EXPECT_NEAR(r.wilcoxon_stat, p.at("w_stat").get<double>(), 1e-9) << a.size();
    EXPECT_NEAR(r.wilcoxon_pvalue, p.at("w_pvalue").get<double>(), 1e-6) << a.size();
  }
}

TEST(PairedTestsTest, DegenerateCases) {
  const std::vector<double> a = {1, 2, 3, 4, 5, 6};
  PairedTestResult r = PairedTests(a, a);
  EXPECT_EQ(r.t_stat, 0.0);
  EXPECT_EQ(r.t_pvalue, 1.0);
  EXPECT_EQ(r.wilcoxon_pvalue, 1.0);
  std::vector<double> b = a;
  for (double &x : b) x += 1.0;
  r = PairedTests(a, b);
  EXPECT_TRUE(r.degenerate_direction);
  EXPECT_FALSE(r.t_stat.has_value());
  EXPECT_LT(r.t_pvalue, 1e-6);
  EXPECT_EQ(CodeOf([&] { PairedTests(a, {1.0}); }), ErrorCode::kLengthMismatch);
  EXPECT_EQ(CodeOf([] { PairedTests({1.0}, {2.0}); }), ErrorCode::kInvalidArgument);
}

TEST(GroupTest, ConservationAndSingleGroup) {
  Gen g(45);
  const auto groups = ParseAgeGroups("4-6,7-9,10-13");
  ASSERT_EQ(groups.size(), 3u);
  EXPECT_EQ(groups[1].label, "7-9");
  EXPECT_EQ(groups[2].age_min, 10.0);
  EXPECT_EQ(groups[2].age_max, 13.0);
  for (int trial = 0; trial < 100; ++trial) {
    RandomCase rc = MakeRandomCase(g);
    rc.trials.total_speech_sec = 180.0;  // 6 utterances x 30 s
    const auto reps = ComputeGroupReports(rc.dets, rc.trials, groups, 0.5);
    int n_true = 0, utts = 0;
    for (const auto &gr : reps) {
      utts += gr.num_utts;
      if (gr.report)
        for (const auto &k : gr.report->keywords) n_true += k.n_true;
    }
    ASSERT_EQ(utts, 6);
    ASSERT_EQ(n_true, static_cast<int>(rc.trials.refs.size()));

    const auto all = ComputeGroupReports(rc.dets, rc.trials, {{"all", 0, 99}}, 0.5);
    const TwvReport full = ComputeTwv(rc.dets, rc.trials, 0.5);
    ASSERT_TRUE(all[0].report.has_value());
    ASSERT_EQ(all[0].report->atwv, full.atwv);
    ASSERT_EQ(all[0].report->mtwv, full.mtwv);
    ASSERT_EQ(all[0].report->p_fa_avg, full.p_fa_avg);
    ASSERT_EQ(all[0].report->keywords.size(), full.keywords.size());
  }
}

TEST(GroupTest, EmptyGroupFlagged) {
  Gen g(46);
  const RandomCase rc = MakeRandomCase(g);
  const auto reps = ComputeGroupReports(rc.dets, rc.trials, {{"adult", 20, 60}}, 0.5);
  ASSERT_EQ(reps.size(), 1u);
  EXPECT_TRUE(reps[0].empty);
  EXPECT_FALSE(reps[0].report.has_value());
  EXPECT_TRUE(CodeOf([] { ParseAgeGroups("4-"); }).has_value());
}

TEST(TrialIoTest, RefsAndMetaRoundTrip) {
  testing::TempDir dir("trial");
  const std::vector<RefOccurrence> refs = {{"ONE", "u1", 0.5, 0.75}, {"TWO", "u2", 1.25, 2.0}};
  WriteRefs(refs, dir / "refs.tsv");
  EXPECT_EQ(ReadRefs(dir / "refs.tsv"), refs);
  std::map<std::string, SpeakerInfo> meta = {{"u1", {"s1", 5.0, 2.5}}, {"u2", {"s2", std::nullopt, 3.0}}};
  WriteSpeakerMeta(meta, dir / "meta.tsv");
  const auto back = ReadSpeakerMeta(dir / "meta.tsv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.at("u1").age, 5.0);
  EXPECT_FALSE(back.at("u2").age.has_value());
  EXPECT_EQ(back.at("u2").duration, 3.0);
  testing::Spit(dir / "bad.tsv", "ONE\tu1\tx\t1\n");
  EXPECT_EQ(CodeOf([&] { ReadRefs(dir / "bad.tsv"); }), ErrorCode::kParseError);
}

}  // namespace
}  // namespace kws

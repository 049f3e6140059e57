// tests/features_test.cc

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
#include <complex>
#include <numbers>

#include "kws/features.h"
#include "test_util.h"

#ifndef KWS_TEST_DATA_DIR
#error "KWS_TEST_DATA_DIR must point at tests/data"
#endif

namespace kws {
namespace {

using testing::CodeOf;
using testing::Gen;

double HtkMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double HtkHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Straight-line MFCC of frame t with default settings except those in `cfg`,
// using a direct DFT and the triangle definition in the mel domain.
std::vector<double> OracleMfccFrame(const Waveform &w, const MfccConfig &cfg, int t, bool cepstra) {
  const int sr = w.sample_rate;
  const int len = static_cast<int>(std::lround(cfg.frame_length_ms * sr / 1000.0));
  const int shift = static_cast<int>(std::lround(cfg.frame_shift_ms * sr / 1000.0));
  int nfft = 1;
  while (nfft < len) nfft *= 2;
  std::vector<double> x(len);
  for (int n = 0; n < len; ++n) {
    const double cur = w.samples[t * shift + n];
    const double prev = n == 0 ? cur : w.samples[t * shift + n - 1];
    x[n] = (cur - cfg.preemph * prev) * (0.54 - 0.46 * std::cos(2 * std::numbers::pi * n / (len - 1)));
  }
  std::vector<double> power(nfft / 2 + 1);
  for (int k = 0; k <= nfft / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (int n = 0; n < len; ++n) acc += x[n] * std::polar(1.0, -2 * std::numbers::pi * k * n / nfft);
    power[k] = std::norm(acc);
  }
  const int m = cfg.num_mel_bins;
  const double hi = cfg.high_freq > 0 ? cfg.high_freq : sr / 2.0;
  const double lo_mel = HtkMel(cfg.low_freq), step = (HtkMel(hi) - lo_mel) / (m + 1);
  std::vector<double> logmel(m);
  for (int b = 0; b < m; ++b) {
    const double l = lo_mel + b * step, c = l + step, r = c + step;
    double e = 0.0;
    for (int k = 0; k <= nfft / 2; ++k) {
      const double mel = HtkMel(static_cast<double>(k) * sr / nfft);
      if (mel > l && mel <= c) e += (mel - l) / step * power[k];
      if (mel > c && mel < r) e += (r - mel) / step * power[k];
    }
    logmel[b] = std::log(std::max(e, cfg.log_floor));
  }
  if (!cepstra) return logmel;
  std::vector<double> ceps(cfg.num_ceps);
  for (int k = 0; k < cfg.num_ceps; ++k) {
    double acc = 0.0;
    for (int n = 0; n < m; ++n) acc += logmel[n] * std::cos(std::numbers::pi * k * (n + 0.5) / m);
    ceps[k] = acc * std::sqrt((k == 0 ? 1.0 : 2.0) / m);
  }
  return ceps;
}

TEST(MfccTest, OneSecondGives99Frames) {
  const FeatureMatrix f = ComputeMfcc(testing::Voiced(120, 16000), MfccConfig{});
  EXPECT_EQ(f.num_rows, 99);
  EXPECT_EQ(f.num_cols, 13);
  EXPECT_FLOAT_EQ(f.frame_shift, 0.01f);
}

TEST(MfccTest, FrameCountFormula) {
  Gen g(41);
  for (int trial = 0; trial < 300; ++trial) {
    MfccConfig cfg;
    cfg.frame_length_ms = g.Uniform(5, 40);
    cfg.frame_shift_ms = g.Uniform(2, cfg.frame_length_ms);
    cfg.num_mel_bins = 20;
    const int rate = std::vector<int>{8000, 16000, 22050}[g.Int(0, 2)];
    const int len = static_cast<int>(std::lround(cfg.frame_length_ms * rate / 1000.0));
    const int shift = static_cast<int>(std::lround(cfg.frame_shift_ms * rate / 1000.0));
    Waveform w;
    w.sample_rate = rate;
    w.samples = g.Normals(g.Int(len, 4 * len + 100), 0.1);
    const int expect = 1 + (static_cast<int>(w.samples.size()) - len) / shift;
    ASSERT_EQ(ComputeMfcc(w, cfg).num_rows, expect) << trial;
  }
}

TEST(MfccTest, MatchesDirectOracle) {
  Gen g(42);
  Waveform w = testing::Voiced(180, 2000);
  for (double &s : w.samples) s += g.Normal(0.01);
  MfccConfig cfg;
  const FeatureMatrix f = ComputeMfcc(w, cfg);
  const FeatureMatrix lm = ComputeLogMel(w, cfg);
  for (int t : {0, 5, f.num_rows - 1}) {
    const auto ceps = OracleMfccFrame(w, cfg, t, true);
    const auto mel = OracleMfccFrame(w, cfg, t, false);
    for (int k = 0; k < 13; ++k) EXPECT_NEAR(f(t, k), ceps[k], 1e-3 * (1 + std::abs(ceps[k])));
    for (int b = 0; b < 40; ++b) EXPECT_NEAR(lm(t, b), mel[b], 1e-4 * (1 + std::abs(mel[b])));
  }
}

TEST(MfccTest, ZeroInputIsConstantFloor) {
  Waveform w;
  w.samples.assign(8000, 0.0);
  const FeatureMatrix f = ComputeMfcc(w, MfccConfig{});
  const double c0 = std::sqrt(40.0) * std::log(1e-10);
  for (int t = 0; t < f.num_rows; ++t) {
    EXPECT_NEAR(f(t, 0), c0, 1e-4);
    for (int k = 1; k < 13; ++k) ASSERT_NEAR(f(t, k), 0.0, 1e-4);
  }
}

TEST(MfccTest, ToneLandsInNearestMelChannel) {
  MfccConfig cfg;
  // Centres from the HTK formula, independent of the library.
  const double lo = HtkMel(cfg.low_freq), step = (HtkMel(8000) - lo) / 41;
  auto nearest = [&](double hz) {
    int best = 0;
    for (int b = 1; b < 40; ++b)
      if (std::abs(HtkHz(lo + (b + 1) * step) - hz) < std::abs(HtkHz(lo + (best + 1) * step) - hz)) best = b;
    return best;
  };
  auto argmax = [](const FeatureMatrix &f) {
    int best = 0;
    for (int b = 1; b < f.num_cols; ++b)
      if (f(2, b) > f(2, best)) best = b;
    return best;
  };
  const Waveform a = testing::Sine(1000, 1600), b = testing::Sine(3000, 1600);
  const int ca = argmax(ComputeLogMel(a, cfg)), cb = argmax(ComputeLogMel(b, cfg));
  EXPECT_NEAR(ca, nearest(1000), 1);
  EXPECT_NEAR(cb, nearest(3000), 1);
  EXPECT_NE(ca, cb);
  const FeatureMatrix fa = ComputeMfcc(a, cfg), fb = ComputeMfcc(b, cfg);
  double diff = 0.0;
  for (int k = 0; k < 13; ++k) diff += std::abs(fa(2, k) - fb(2, k));
  EXPECT_GT(diff, 1.0);
}

TEST(MfccTest, Errors) {
  Waveform w;
  w.samples.assign(319, 0.1);
  EXPECT_EQ(CodeOf([&] { ComputeMfcc(w, MfccConfig{}); }), ErrorCode::kTooShort);
  MfccConfig bad;
  bad.num_ceps = 41;
  w.samples.assign(1000, 0.1);
  EXPECT_EQ(CodeOf([&] { ComputeMfcc(w, bad); }), ErrorCode::kInvalidArgument);
}

TEST(MfccTest, DitherIsSeeded) {
  MfccConfig cfg;
  cfg.dither = 1e-3;
  cfg.dither_seed = 4;
  const Waveform w = testing::Voiced(100, 4000);
  EXPECT_EQ(ComputeMfcc(w, cfg), ComputeMfcc(w, cfg));
  EXPECT_NE(ComputeMfcc(w, cfg), ComputeMfcc(w, MfccConfig{}));
}

FeatureMatrix RandomMatrix(Gen &g, int rows, int cols, const std::string &id = "u") {
  FeatureMatrix m;
  m.utt_id = id;
  m.frame_shift = 0.01f;
  m.Resize(rows, cols);
  for (auto &v : m.data) v = static_cast<float>(g.Normal(3.0) + 1.0);
  return m;
}

TEST(SpliceTest, NineFrameContext) {
  Gen g(5);
  EXPECT_EQ(Splice(RandomMatrix(g, 20, 13), 4).num_cols, 117);
}

TEST(SpliceTest, ContextZeroIsIdentity) {
  Gen g(6);
  const FeatureMatrix m = RandomMatrix(g, 7, 3);
  EXPECT_EQ(Splice(m, 0), m);
}

TEST(SpliceTest, SingleFrameRepeats) {
  Gen g(7);
  const FeatureMatrix m = RandomMatrix(g, 1, 13);
  const FeatureMatrix s = Splice(m, 4);
  ASSERT_EQ(s.num_rows, 1);
  for (int j = 0; j < 9; ++j)
    for (int d = 0; d < 13; ++d) EXPECT_EQ(s(0, j * 13 + d), m(0, d));
}

TEST(SpliceTest, EdgeRepeatAndComposition) {
  Gen g(8);
  for (int trial = 0; trial < 50; ++trial) {
    const int rows = g.Int(1, 12), dim = g.Int(1, 5), a = g.Int(0, 3), b = g.Int(0, 3);
    const FeatureMatrix m = RandomMatrix(g, rows, dim);
    const FeatureMatrix s = Splice(m, a);
    for (int t = 0; t < rows; ++t)
      for (int j = -a; j <= a; ++j)
        for (int d = 0; d < dim; ++d)
          ASSERT_EQ(s(t, (j + a) * dim + d), m(std::clamp(t + j, 0, rows - 1), d));
    EXPECT_EQ(Splice(s, b).num_cols, dim * (2 * a + 1) * (2 * b + 1));
  }
  EXPECT_EQ(CodeOf([&] { Splice(RandomMatrix(g, 2, 2), -1); }), ErrorCode::kInvalidArgument);
}

TEST(CmvnTest, ZeroMeanUnitVariance) {
  Gen g(9);
  const FeatureMatrix c = ApplyCmvn(RandomMatrix(g, 50, 13));
  for (int d = 0; d < 13; ++d) {
    double mean = 0.0, var = 0.0;
    for (int t = 0; t < 50; ++t) mean += c(t, d);
    mean /= 50;
    for (int t = 0; t < 50; ++t) var += (c(t, d) - mean) * (c(t, d) - mean);
    var /= 50;
    EXPECT_LT(std::abs(mean), 1e-6);
    EXPECT_NEAR(var, 1.0, 1e-6);
  }
}

TEST(CmvnTest, ConstantColumnBecomesZero) {
  FeatureMatrix m;
  m.Resize(10, 2);
  for (int t = 0; t < 10; ++t) {
    m(t, 0) = 5.0f;
    m(t, 1) = static_cast<float>(t);
  }
  const FeatureMatrix c = ApplyCmvn(m);
  for (int t = 0; t < 10; ++t) EXPECT_EQ(c(t, 0), 0.0f);
}

TEST(CmvnTest, PerSpeakerPoolsUtterances) {
  Gen g(11);
  FeatureMatrix a = RandomMatrix(g, 30, 4), b = RandomMatrix(g, 20, 4), c = RandomMatrix(g, 25, 4);
  a.utt_id = "a";
  b.utt_id = "b";
  c.utt_id = "c";
  // Oracle: speaker s1 owns a and b, so normalize their row concatenation.
  FeatureMatrix ab;
  ab.Resize(50, 4);
  for (int t = 0; t < 50; ++t)
    for (int d = 0; d < 4; ++d) ab(t, d) = t < 30 ? a(t, d) : b(t - 30, d);
  const FeatureMatrix want_ab = ApplyCmvn(ab), want_c = ApplyCmvn(c);
  const auto out = ApplyCmvnPerSpeaker({a, b, c}, {{"a", "s1"}, {"b", "s1"}, {"c", "s2"}});
  ASSERT_EQ(out.size(), 3u);
  for (int t = 0; t < 50; ++t)
    for (int d = 0; d < 4; ++d) ASSERT_NEAR(t < 30 ? out[0](t, d) : out[1](t - 30, d), want_ab(t, d), 1e-5);
  for (size_t i = 0; i < want_c.data.size(); ++i) ASSERT_NEAR(out[2].data[i], want_c.data[i], 1e-5);
  EXPECT_EQ(CodeOf([&] { ApplyCmvnPerSpeaker({a, c}, {{"a", "s1"}}); }), ErrorCode::kInvalidArgument);
}

TEST(CmvnTest, NearlyIdempotent) {
  Gen g(10);
  const FeatureMatrix once = ApplyCmvn(RandomMatrix(g, 40, 13));
  const FeatureMatrix twice = ApplyCmvn(once);
  for (size_t i = 0; i < once.data.size(); ++i) ASSERT_NEAR(once.data[i], twice.data[i], 1e-6);
}

TEST(ArchiveTest, RoundTripIsBitExact) {
  Gen g(12);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<FeatureMatrix> feats;
    const int n = g.Int(0, 4);
    for (int i = 0; i < n; ++i) {
      FeatureMatrix m = RandomMatrix(g, g.Int(1, 9), g.Int(1, 7), "utt" + std::to_string(i));
      m.frame_shift = static_cast<float>(g.Uniform(0.001, 0.05));
      feats.push_back(m);
    }
    ASSERT_EQ(DecodeArchive(EncodeArchive(feats)), feats);
  }
}

TEST(ArchiveTest, FileRoundTripAndErrors) {
  testing::TempDir dir("fea");
  Gen g(13);
  std::vector<FeatureMatrix> feats{RandomMatrix(g, 3, 2, "a"), RandomMatrix(g, 1, 2, "b"),
                                   RandomMatrix(g, 5, 2, "c")};
  WriteArchive(feats, dir / "x.fea");
  EXPECT_EQ(ReadArchive(dir / "x.fea"), feats);

  const std::string bytes = EncodeArchive(feats);
  EXPECT_EQ(CodeOf([&] { DecodeArchive(bytes.substr(0, bytes.size() - 1)); }), ErrorCode::kCorruptArchive);
  EXPECT_EQ(CodeOf([&] { DecodeArchive(bytes.substr(0, 10)); }), ErrorCode::kCorruptArchive);
  EXPECT_EQ(CodeOf([&] { DecodeArchive("FEA2" + bytes.substr(4)); }), ErrorCode::kCorruptArchive);
  EXPECT_EQ(CodeOf([&] { DecodeArchive(bytes + "x"); }), ErrorCode::kCorruptArchive);

  feats[2].utt_id = "a";
  EXPECT_EQ(CodeOf([&] { EncodeArchive(feats); }), ErrorCode::kDuplicateUttId);
}

// The vector in tests/data was written by tools/make_fea1_vector.py, an
// encoder that shares nothing with the C++ writer.
TEST(ArchiveTest, ConformanceVector) {
  const std::string bytes = testing::Slurp(std::string(KWS_TEST_DATA_DIR) + "/fea1_vector.bin");
  ASSERT_FALSE(bytes.empty());
  struct Rec {
    std::string id;
    int rows, cols;
    float shift;
  };
  const std::vector<Rec> recs{{"utt_a", 3, 2, 0.01f}, {"spk1-utt\xc3\xa9", 1, 5, 0.02f}, {"z", 4, 1, 0.02f}};
  std::vector<FeatureMatrix> expect;
  for (size_t k = 0; k < recs.size(); ++k) {
    FeatureMatrix m;
    m.utt_id = recs[k].id;
    m.frame_shift = recs[k].shift;
    m.Resize(recs[k].rows, recs[k].cols);
    for (int t = 0; t < m.num_rows; ++t)
      for (int d = 0; d < m.num_cols; ++d)
        m(t, d) = static_cast<float>((t * m.num_cols + d) * 0.25 - static_cast<double>(k));
    expect.push_back(m);
  }
  EXPECT_EQ(DecodeArchive(bytes), expect);
  EXPECT_EQ(EncodeArchive(expect), bytes);
}

}  // namespace
}  // namespace kws

// tests/audio_test.cc

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

#include "kws/audio.h"
#include "kws/error.h"
#include "test_util.h"

namespace kws {
namespace {

using testing::CodeOf;
using testing::Gen;
using testing::TempDir;

TEST(WavTest, Float32RoundTripIsBitExact) {
  TempDir dir("wav");
  Gen g(1);
  Waveform w;
  w.id = "x";
  w.sample_rate = 22050;
  for (int i = 0; i < 100; ++i) w.samples.push_back(static_cast<float>(g.Uniform(-1, 1)));
  WriteWav(w, dir / "x.wav", WavEncoding::kFloat32);
  const Waveform r = ReadWav(dir / "x.wav");
  EXPECT_EQ(r.sample_rate, 22050);
  EXPECT_EQ(r.id, "x");
  EXPECT_EQ(r.samples, w.samples);
}

TEST(WavTest, Pcm16RoundTripWithinQuantization) {
  TempDir dir("wav");
  Gen g(2);
  for (int trial = 0; trial < 1000; ++trial) {
    Waveform w;
    w.sample_rate = 16000;
    const int n = g.Int(1, 64);
    for (int i = 0; i < n; ++i) w.samples.push_back(g.Uniform(-1, 1));
    WriteWav(w, dir / "p.wav");
    const Waveform r = ReadWav(dir / "p.wav");
    ASSERT_EQ(r.samples.size(), w.samples.size());
    for (int i = 0; i < n; ++i) ASSERT_LE(std::abs(r.samples[i] - w.samples[i]), 1.0 / 32768) << trial;
  }
}

TEST(WavTest, Errors) {
  TempDir dir("wav");
  Waveform w = testing::Sine(100, 10);
  EXPECT_EQ(CodeOf([&] { WriteWav(w, dir / "no/such/dir/x.wav"); }), ErrorCode::kIoError);
  EXPECT_EQ(CodeOf([&] { ReadWav(dir / "missing.wav"); }), ErrorCode::kNotFound);
  testing::Spit(dir / "junk.wav", "definitely not a wave file at all");
  EXPECT_EQ(CodeOf([&] { ReadWav(dir / "junk.wav"); }), ErrorCode::kUnsupportedFormat);
}

TEST(ResampleTest, SameRateIsIdentity) {
  const Waveform w = testing::Voiced(150, 3000);
  EXPECT_EQ(Resample(w, 16000).samples, w.samples);
}

TEST(ResampleTest, HalvingLength) {
  EXPECT_EQ(Resample(testing::Sine(440, 16000), 8000).samples.size(), 8000u);
}

TEST(ResampleTest, LengthFollowsRoundingRule) {
  Gen g(3);
  const int rates[] = {8000, 11025, 16000, 22050, 44100, 48000};
  for (int trial = 0; trial < 200; ++trial) {
    Waveform w;
    w.sample_rate = rates[g.Int(0, 5)];
    w.samples.assign(g.Int(1, 3000), 0.1);
    const int target = rates[g.Int(0, 5)];
    const auto expect = std::llround(static_cast<double>(w.samples.size()) * target / w.sample_rate);
    ASSERT_EQ(static_cast<long long>(Resample(w, target).samples.size()), expect)
        << w.samples.size() << " " << w.sample_rate << "->" << target;
  }
}

TEST(ResampleTest, KeepsToneFrequency) {
  const Waveform y = Resample(testing::Sine(440, 16000), 8000);
  EXPECT_EQ(y.sample_rate, 8000);
  const int n = 4096;
  EXPECT_NEAR(testing::PeakBin(y.samples, n), testing::ExpectedBin(440, n, 8000), 1);
}

TEST(ResampleTest, RejectsBadRate) {
  EXPECT_EQ(CodeOf([] { Resample(testing::Sine(1, 10), 0); }), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace kws

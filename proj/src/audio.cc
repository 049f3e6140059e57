// src/audio.cc

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

#include "kws/audio.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "bytes.h"
#include "kws/error.h"

namespace kws {

namespace {

constexpr int kTaps = 64;
constexpr double kKaiserBeta = 8.6;

// Taps for an output point located `frac` input samples after input index
// base, where tap j multiplies x[base - kTaps/2 + 1 + j]. Normalized to unit
// DC gain.
void DesignPhase(double frac, double cutoff, double *taps) {
  const double half = kTaps / 2.0;
  const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);
  double sum = 0.0;
  for (int j = 0; j < kTaps; ++j) {
    double d = (j - (kTaps / 2 - 1)) - frac;
    double x = 2.0 * cutoff * d;
    double sinc = (x == 0.0) ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
    double r = d / half;
    double win = (std::abs(r) >= 1.0)
                     ? 0.0
                     : std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta;
    taps[j] = 2.0 * cutoff * sinc * win;
    sum += taps[j];
  }
  if (sum != 0.0)
    for (int j = 0; j < kTaps; ++j) taps[j] /= sum;
}

}  // namespace

void ValidateWaveform(const Waveform &wave) {
  if (wave.sample_rate <= 0)
    Fail(ErrorCode::kInvalidArgument, "sample rate must be positive");
  for (double s : wave.samples)
    if (!std::isfinite(s)) Fail(ErrorCode::kInvalidArgument, "non-finite sample in " + wave.id);
}

Waveform ReadWav(const std::string &path) {
  const std::string bytes = ReadFileBytes(path);
  const auto *data = reinterpret_cast<const unsigned char *>(bytes.data());
  const size_t size = bytes.size();
  if (size < 12 || std::memcmp(data, "RIFF", 4) != 0 || std::memcmp(data + 8, "WAVE", 4) != 0)
    Fail(ErrorCode::kUnsupportedFormat, path + ": not a RIFF/WAVE file");

  int channels = 0, bits = 0, format = 0;
  uint32_t rate = 0;
  const unsigned char *pcm = nullptr;
  size_t pcm_bytes = 0;
  size_t pos = 12;
  while (pos + 8 <= size) {
    uint32_t chunk_size = ReadU32(data + pos + 4);
    const unsigned char *body = data + pos + 8;
    size_t avail = std::min<size_t>(chunk_size, size - pos - 8);
    if (std::memcmp(data + pos, "fmt ", 4) == 0) {
      if (avail < 16) Fail(ErrorCode::kUnsupportedFormat, path + ": short fmt chunk");
      format = ReadU16(body);
      channels = ReadU16(body + 2);
      rate = ReadU32(body + 4);
      bits = ReadU16(body + 14);
      if (format == 0xFFFE && avail >= 26) format = ReadU16(body + 24);
    } else if (std::memcmp(data + pos, "data", 4) == 0) {
      pcm = body;
      pcm_bytes = avail;
    }
    pos += 8 + chunk_size + (chunk_size & 1);
  }
  if (format == 0 || pcm == nullptr)
    Fail(ErrorCode::kUnsupportedFormat, path + ": missing fmt or data chunk");
  if (channels != 1)
    Fail(ErrorCode::kUnsupportedFormat, path + ": " + std::to_string(channels) + " channels");
  if (rate == 0) Fail(ErrorCode::kUnsupportedFormat, path + ": zero sample rate");

  Waveform wave;
  wave.id = std::filesystem::path(path).stem().string();
  wave.sample_rate = static_cast<int>(rate);
  if (format == 1 && bits == 16) {
    size_t n = pcm_bytes / 2;
    wave.samples.resize(n);
    for (size_t i = 0; i < n; ++i)
      wave.samples[i] = static_cast<int16_t>(ReadU16(pcm + 2 * i)) / 32768.0;
  } else if (format == 3 && bits == 32) {
    size_t n = pcm_bytes / 4;
    wave.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      uint32_t u = ReadU32(pcm + 4 * i);
      float f;
      std::memcpy(&f, &u, 4);
      wave.samples[i] = f;
    }
  } else {
    Fail(ErrorCode::kUnsupportedFormat,
         path + ": format " + std::to_string(format) + " with " + std::to_string(bits) + " bits");
  }
  ValidateWaveform(wave);
  return wave;
}

void WriteWav(const Waveform &wave, const std::string &path, WavEncoding encoding) {
  ValidateWaveform(wave);
  const bool is_float = encoding == WavEncoding::kFloat32;
  const uint16_t bytes_per_sample = is_float ? 4 : 2;
  const uint32_t data_bytes = static_cast<uint32_t>(wave.samples.size() * bytes_per_sample);

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(&out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(&out, 16);
  PutU16(&out, is_float ? 3 : 1);
  PutU16(&out, 1);
  PutU32(&out, static_cast<uint32_t>(wave.sample_rate));
  PutU32(&out, static_cast<uint32_t>(wave.sample_rate) * bytes_per_sample);
  PutU16(&out, bytes_per_sample);
  PutU16(&out, static_cast<uint16_t>(8 * bytes_per_sample));
  out += "data";
  PutU32(&out, data_bytes);
  for (double s : wave.samples) {
    if (is_float) {
      float f = static_cast<float>(s);
      uint32_t u;
      std::memcpy(&u, &f, 4);
      PutU32(&out, u);
    } else {
      double q = std::round(s * 32768.0);
      q = std::clamp(q, -32768.0, 32767.0);
      PutU16(&out, static_cast<uint16_t>(static_cast<int16_t>(q)));
    }
  }
  WriteFileBytes(path, out);
}

Waveform Resample(const Waveform &wave, int target_rate) {
  if (target_rate <= 0) Fail(ErrorCode::kInvalidArgument, "target rate must be positive");
  if (wave.sample_rate <= 0) Fail(ErrorCode::kInvalidArgument, "source rate must be positive");
  Waveform out;
  out.id = wave.id;
  out.sample_rate = target_rate;
  if (target_rate == wave.sample_rate) {
    out.samples = wave.samples;
    return out;
  }
  const int64_t g = std::gcd<int64_t>(wave.sample_rate, target_rate);
  const int64_t up = target_rate / g;          // L
  const int64_t down = wave.sample_rate / g;   // M
  const int64_t in_len = static_cast<int64_t>(wave.samples.size());
  const int64_t out_len = std::llround(static_cast<double>(in_len) * target_rate / wave.sample_rate);
  const double cutoff = 0.5 * std::min(1.0, static_cast<double>(up) / down);

  // Precompute the polyphase bank unless the phase count is unreasonably large.
  const bool use_table = up <= 8192;
  std::vector<double> table;
  if (use_table) {
    table.resize(static_cast<size_t>(up) * kTaps);
    for (int64_t p = 0; p < up; ++p)
      DesignPhase(static_cast<double>(p) / up, cutoff, &table[static_cast<size_t>(p) * kTaps]);
  }
  std::vector<double> scratch(kTaps);
  out.samples.resize(static_cast<size_t>(out_len));
  for (int64_t n = 0; n < out_len; ++n) {
    const int64_t num = n * down;
    const int64_t base = num / up;
    const int64_t phase = num % up;
    const double *taps;
    if (use_table) {
      taps = &table[static_cast<size_t>(phase) * kTaps];
    } else {
      DesignPhase(static_cast<double>(phase) / up, cutoff, scratch.data());
      taps = scratch.data();
    }
    double acc = 0.0;
    const int64_t first = base - (kTaps / 2 - 1);
    for (int j = 0; j < kTaps; ++j) {
      int64_t k = first + j;
      if (k >= 0 && k < in_len) acc += taps[j] * wave.samples[static_cast<size_t>(k)];
    }
    out.samples[static_cast<size_t>(n)] = acc;
  }
  return out;
}

}  // namespace kws

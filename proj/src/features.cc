// src/features.cc

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

#include "kws/features.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "bytes.h"
#include "fft.h"
#include "kws/error.h"

namespace kws {

void MfccConfig::Validate(int sample_rate) const {
  if (sample_rate <= 0) Fail(ErrorCode::kInvalidArgument, "sample rate must be positive");
  if (frame_length_ms <= 0.0 || frame_shift_ms <= 0.0)
    Fail(ErrorCode::kInvalidArgument, "frame length and shift must be positive");
  if (num_ceps < 1 || num_ceps > num_mel_bins)
    Fail(ErrorCode::kInvalidArgument, "need 1 <= num_ceps <= num_mel_bins");
  const double nyquist = sample_rate / 2.0;
  const double high = high_freq > 0.0 ? high_freq : nyquist;
  if (high > nyquist || low_freq < 0.0 || low_freq >= high)
    Fail(ErrorCode::kInvalidArgument, "need 0 <= low_freq < high_freq <= Nyquist");
  if (!(log_floor > 0.0)) Fail(ErrorCode::kInvalidArgument, "log_floor must be positive");
}

int FrameLengthSamples(const MfccConfig &cfg, int sample_rate) {
  return static_cast<int>(std::lround(cfg.frame_length_ms * 1e-3 * sample_rate));
}

int FrameShiftSamples(const MfccConfig &cfg, int sample_rate) {
  return static_cast<int>(std::lround(cfg.frame_shift_ms * 1e-3 * sample_rate));
}

double MelScale(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double InverseMelScale(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelBanks::MelBanks(const MfccConfig &cfg, int sample_rate, int fft_size) {
  const int num_bins = cfg.num_mel_bins;
  const double high = cfg.high_freq > 0.0 ? cfg.high_freq : sample_rate / 2.0;
  const double mel_low = MelScale(cfg.low_freq);
  const double mel_high = MelScale(high);
  const double mel_delta = (mel_high - mel_low) / (num_bins + 1);
  const int num_fft_bins = fft_size / 2 + 1;
  const double hz_per_bin = static_cast<double>(sample_rate) / fft_size;

  center_hz_.resize(num_bins);
  first_.resize(num_bins);
  weights_.resize(num_bins);
  for (int b = 0; b < num_bins; ++b) {
    const double left = mel_low + b * mel_delta;
    const double center = left + mel_delta;
    const double right = center + mel_delta;
    center_hz_[b] = InverseMelScale(center);
    int first = -1;
    std::vector<double> w;
    for (int k = 0; k < num_fft_bins; ++k) {
      const double mel = MelScale(k * hz_per_bin);
      if (mel <= left || mel >= right) continue;
      const double weight = mel <= center ? (mel - left) / mel_delta : (right - mel) / mel_delta;
      if (first < 0) first = k;
      // Bins inside a triangle are contiguous, so pad any gap defensively.
      w.resize(k - first + 1, 0.0);
      w[k - first] = weight;
    }
    first_[b] = std::max(first, 0);
    weights_[b] = std::move(w);
  }
}

void MelBanks::Compute(const std::vector<double> &power, std::vector<double> *out) const {
  out->assign(center_hz_.size(), 0.0);
  for (size_t b = 0; b < weights_.size(); ++b) {
    double sum = 0.0;
    const auto &w = weights_[b];
    for (size_t j = 0; j < w.size(); ++j) sum += w[j] * power[first_[b] + j];
    (*out)[b] = sum;
  }
}

namespace {

// Shared framing for the log-mel and cepstral outputs.
FeatureMatrix ComputeFrames(const Waveform &wave, const MfccConfig &cfg, bool cepstra) {
  cfg.Validate(wave.sample_rate);
  const int frame_len = FrameLengthSamples(cfg, wave.sample_rate);
  const int shift = FrameShiftSamples(cfg, wave.sample_rate);
  if (frame_len < 2 || shift < 1)
    Fail(ErrorCode::kInvalidArgument, "frame length or shift too small for the sample rate");
  const int len = static_cast<int>(wave.samples.size());
  if (len < frame_len)
    Fail(ErrorCode::kTooShort, wave.id + ": " + std::to_string(len) +
                                   " samples, need at least " + std::to_string(frame_len));
  const int num_frames = 1 + (len - frame_len) / shift;
  int fft_size = 1;
  while (fft_size < frame_len) fft_size <<= 1;

  RealFft fft(fft_size);
  MelBanks banks(cfg, wave.sample_rate, fft_size);
  const int num_mel = cfg.num_mel_bins;

  std::vector<double> hamming(frame_len);
  for (int n = 0; n < frame_len; ++n)
    hamming[n] = 0.54 - 0.46 * std::cos(2.0 * M_PI * n / (frame_len - 1));

  // Orthonormal DCT-II rows.
  std::vector<std::vector<double>> dct;
  if (cepstra) {
    dct.assign(cfg.num_ceps, std::vector<double>(num_mel));
    for (int k = 0; k < cfg.num_ceps; ++k) {
      const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / num_mel);
      for (int n = 0; n < num_mel; ++n)
        dct[k][n] = scale * std::cos(M_PI * k * (n + 0.5) / num_mel);
    }
  }

  std::vector<double> samples = wave.samples;
  if (cfg.dither > 0.0) {
    std::mt19937_64 rng(cfg.dither_seed);
    std::normal_distribution<double> gauss(0.0, cfg.dither);
    for (double &s : samples) s += gauss(rng);
  }

  FeatureMatrix out;
  out.utt_id = wave.id;
  out.frame_shift = static_cast<float>(static_cast<double>(shift) / wave.sample_rate);
  out.Resize(num_frames, cepstra ? cfg.num_ceps : num_mel);

  std::vector<double> frame(frame_len);
  std::vector<std::complex<double>> spec;
  std::vector<double> power(fft_size / 2 + 1);
  std::vector<double> mel;
  for (int t = 0; t < num_frames; ++t) {
    const double *x = samples.data() + static_cast<size_t>(t) * shift;
    // Pre-emphasis within the frame; the first sample uses itself as history.
    for (int n = frame_len - 1; n >= 0; --n) {
      const double prev = n > 0 ? x[n - 1] : x[0];
      frame[n] = (x[n] - cfg.preemph * prev) * hamming[n];
    }
    fft.Forward(frame, &spec);
    for (size_t k = 0; k < power.size(); ++k) power[k] = std::norm(spec[k]);
    banks.Compute(power, &mel);
    for (double &e : mel) e = std::log(std::max(e, cfg.log_floor));
    if (!cepstra) {
      for (int b = 0; b < num_mel; ++b) out(t, b) = static_cast<float>(mel[b]);
      continue;
    }
    for (int k = 0; k < cfg.num_ceps; ++k) {
      double c = 0.0;
      for (int n = 0; n < num_mel; ++n) c += dct[k][n] * mel[n];
      out(t, k) = static_cast<float>(c);
    }
  }
  return out;
}

constexpr char kArchiveMagic[4] = {'F', 'E', 'A', '1'};
constexpr uint32_t kArchiveVersion = 1;

}  // namespace

FeatureMatrix ComputeMfcc(const Waveform &wave, const MfccConfig &cfg) {
  return ComputeFrames(wave, cfg, true);
}

FeatureMatrix ComputeLogMel(const Waveform &wave, const MfccConfig &cfg) {
  return ComputeFrames(wave, cfg, false);
}

FeatureMatrix Splice(const FeatureMatrix &feats, int context) {
  if (context < 0) Fail(ErrorCode::kInvalidArgument, "splice context must be >= 0");
  const int rows = feats.num_rows;
  const int dim = feats.num_cols;
  const int width = 2 * context + 1;
  FeatureMatrix out;
  out.utt_id = feats.utt_id;
  out.frame_shift = feats.frame_shift;
  out.Resize(rows, dim * width);
  for (int t = 0; t < rows; ++t) {
    for (int j = 0; j < width; ++j) {
      const int src = std::clamp(t - context + j, 0, rows - 1);
      std::copy(feats.Row(src), feats.Row(src) + dim, &out(t, j * dim));
    }
  }
  return out;
}

FeatureMatrix ApplyCmvn(const FeatureMatrix &feats) {
  const int rows = feats.num_rows;
  const int dim = feats.num_cols;
  FeatureMatrix out = feats;
  if (rows == 0) return out;
  for (int d = 0; d < dim; ++d) {
    double mean = 0.0;
    for (int t = 0; t < rows; ++t) mean += feats(t, d);
    mean /= rows;
    double var = 0.0;
    for (int t = 0; t < rows; ++t) {
      const double c = feats(t, d) - mean;
      var += c * c;
    }
    var /= rows;
    const double inv = 1.0 / std::sqrt(var + 1e-10);
    for (int t = 0; t < rows; ++t) out(t, d) = static_cast<float>((feats(t, d) - mean) * inv);
  }
  return out;
}

std::vector<FeatureMatrix> ApplyCmvnPerSpeaker(const std::vector<FeatureMatrix> &feats,
                                               const std::map<std::string, std::string> &utt2spk) {
  struct Stats {
    std::vector<double> sum, sum_sq;
    double n = 0;
  };
  std::map<std::string, Stats> by_spk;
  auto speaker = [&](const FeatureMatrix &f) -> const std::string & {
    auto it = utt2spk.find(f.utt_id);
    if (it == utt2spk.end()) Fail(ErrorCode::kInvalidArgument, f.utt_id + ": no speaker in metadata");
    return it->second;
  };
  for (const auto &f : feats) {
    Stats &s = by_spk[speaker(f)];
    if (s.sum.empty()) {
      s.sum.assign(f.num_cols, 0.0);
      s.sum_sq.assign(f.num_cols, 0.0);
    }
    if (static_cast<int>(s.sum.size()) != f.num_cols)
      Fail(ErrorCode::kDimMismatch, f.utt_id + ": dimension differs within speaker");
    for (int t = 0; t < f.num_rows; ++t)
      for (int d = 0; d < f.num_cols; ++d) {
        s.sum[d] += f(t, d);
        s.sum_sq[d] += static_cast<double>(f(t, d)) * f(t, d);
      }
    s.n += f.num_rows;
  }
  std::vector<FeatureMatrix> out;
  out.reserve(feats.size());
  for (const auto &f : feats) {
    const Stats &s = by_spk.at(speaker(f));
    FeatureMatrix g = f;
    for (int d = 0; d < f.num_cols; ++d) {
      const double mean = s.sum[d] / s.n;
      const double var = std::max(s.sum_sq[d] / s.n - mean * mean, 0.0);
      const double inv = 1.0 / std::sqrt(var + 1e-10);
      for (int t = 0; t < f.num_rows; ++t) g(t, d) = static_cast<float>((f(t, d) - mean) * inv);
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::string EncodeArchive(const std::vector<FeatureMatrix> &feats) {
  std::set<std::string> seen;
  for (const auto &m : feats) {
    if (!seen.insert(m.utt_id).second)
      Fail(ErrorCode::kDuplicateUttId, "utterance '" + m.utt_id + "' appears twice");
    if (m.utt_id.size() > 0xffff) Fail(ErrorCode::kInvalidArgument, "utterance id too long");
    if (m.data.size() != static_cast<size_t>(m.num_rows) * m.num_cols)
      Fail(ErrorCode::kDimMismatch, m.utt_id + ": data size does not match T x D");
  }
  std::string out(kArchiveMagic, 4);
  PutU32(&out, kArchiveVersion);
  PutU32(&out, static_cast<uint32_t>(feats.size()));
  for (const auto &m : feats) {
    PutU16(&out, static_cast<uint16_t>(m.utt_id.size()));
    out += m.utt_id;
    PutU32(&out, static_cast<uint32_t>(m.num_rows));
    PutU32(&out, static_cast<uint32_t>(m.num_cols));
    PutF32(&out, m.frame_shift);
    for (float v : m.data) PutF32(&out, v);
  }
  return out;
}

std::vector<FeatureMatrix> DecodeArchive(const std::string &bytes) {
  ByteReader in(bytes, ErrorCode::kCorruptArchive, "feature archive");
  if (in.Str(4) != std::string(kArchiveMagic, 4)) in.Bad("bad magic");
  if (in.U32() != kArchiveVersion) in.Bad("unsupported version");
  const uint32_t count = in.U32();
  std::vector<FeatureMatrix> out;
  std::set<std::string> seen;
  for (uint32_t i = 0; i < count; ++i) {
    FeatureMatrix m;
    m.utt_id = in.Str(in.U16());
    if (!seen.insert(m.utt_id).second)
      Fail(ErrorCode::kDuplicateUttId, "utterance '" + m.utt_id + "' appears twice in archive");
    const uint32_t rows = in.U32();
    const uint32_t cols = in.U32();
    m.frame_shift = in.F32();
    const uint64_t n = static_cast<uint64_t>(rows) * cols;
    // Refuse sizes the remaining bytes cannot hold before allocating.
    if (n > (bytes.size() - in.offset()) / 4) in.Bad("record larger than file");
    m.num_rows = static_cast<int>(rows);
    m.num_cols = static_cast<int>(cols);
    m.data.resize(n);
    for (auto &v : m.data) v = in.F32();
    out.push_back(std::move(m));
  }
  if (!in.AtEnd()) in.Bad("trailing bytes");
  return out;
}

void WriteArchive(const std::vector<FeatureMatrix> &feats, const std::string &path) {
  WriteFileBytes(path, EncodeArchive(feats));
}

std::vector<FeatureMatrix> ReadArchive(const std::string &path) {
  return DecodeArchive(ReadFileBytes(path));
}

}  // namespace kws

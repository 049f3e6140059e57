// include/kws/features.h

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

#ifndef KWS_FEATURES_H_
#define KWS_FEATURES_H_

#include <map>
#include <string>
#include <vector>

#include "kws/audio.h"

namespace kws {

// T x D frame features for one utterance. Values are float; an archive round
// trip is exact.
struct FeatureMatrix {
  std::string utt_id;
  float frame_shift = 0.01f;  // seconds
  int num_rows = 0;
  int num_cols = 0;
  std::vector<float> data;  // row-major

  float &operator()(int t, int d) { return data[static_cast<size_t>(t) * num_cols + d]; }
  float operator()(int t, int d) const { return data[static_cast<size_t>(t) * num_cols + d]; }
  const float *Row(int t) const { return data.data() + static_cast<size_t>(t) * num_cols; }

  void Resize(int rows, int cols) {
    num_rows = rows;
    num_cols = cols;
    data.assign(static_cast<size_t>(rows) * cols, 0.0f);
  }
  bool operator==(const FeatureMatrix &other) const = default;
};

struct MfccConfig {
  double frame_length_ms = 20.0;
  double frame_shift_ms = 10.0;
  int num_mel_bins = 40;
  int num_ceps = 13;
  double low_freq = 20.0;
  double high_freq = 0.0;  // <= 0 means Nyquist
  double preemph = 0.97;
  double dither = 0.0;  // std-dev of added Gaussian noise, in sample units
  unsigned long long dither_seed = 0;
  double log_floor = 1e-10;

  void Validate(int sample_rate) const;
};

int FrameLengthSamples(const MfccConfig &cfg, int sample_rate);
int FrameShiftSamples(const MfccConfig &cfg, int sample_rate);

// HTK mel scale, 2595 * log10(1 + f / 700).
double MelScale(double hz);
double InverseMelScale(double mel);

// Triangular mel filter bank over the power spectrum of an fft_size-point FFT.
class MelBanks {
 public:
  MelBanks(const MfccConfig &cfg, int sample_rate, int fft_size);

  int NumBins() const { return static_cast<int>(center_hz_.size()); }
  double CenterHz(int bin) const { return center_hz_[bin]; }
  // power has fft_size / 2 + 1 entries; out gets NumBins() energies.
  void Compute(const std::vector<double> &power, std::vector<double> *out) const;

 private:
  std::vector<double> center_hz_;
  std::vector<int> first_;
  std::vector<std::vector<double>> weights_;
};

// Per-frame pipeline: pre-emphasis, Hamming window, power spectrum, mel
// energies, log with floor, orthonormal DCT-II, c0..c(num_ceps-1).
// Frame count is 1 + floor((len - frame_len) / shift). Throws kTooShort if the
// wave is shorter than one frame.
FeatureMatrix ComputeMfcc(const Waveform &wave, const MfccConfig &cfg);

// Log mel energies (before the DCT), same framing as ComputeMfcc.
FeatureMatrix ComputeLogMel(const Waveform &wave, const MfccConfig &cfg);

// Frame t becomes frames t-context .. t+context concatenated, with the first
// and last frames repeated past the edges.
FeatureMatrix Splice(const FeatureMatrix &feats, int context);

// Per-utterance mean and variance normalization; variance is floored by 1e-10.
FeatureMatrix ApplyCmvn(const FeatureMatrix &feats);

// Same normalization with statistics pooled over all utterances of a speaker.
// `utt2spk` must cover every utterance (kInvalidArgument otherwise).
std::vector<FeatureMatrix> ApplyCmvnPerSpeaker(const std::vector<FeatureMatrix> &feats,
                                               const std::map<std::string, std::string> &utt2spk);

// FEA1 archive. Throws kDuplicateUttId on write, kCorruptArchive on a bad magic,
// version or truncated record.
void WriteArchive(const std::vector<FeatureMatrix> &feats, const std::string &path);
std::vector<FeatureMatrix> ReadArchive(const std::string &path);

// In-memory forms of the above, used by tests and hashing.
std::string EncodeArchive(const std::vector<FeatureMatrix> &feats);
std::vector<FeatureMatrix> DecodeArchive(const std::string &bytes);

}  // namespace kws

#endif  // KWS_FEATURES_H_

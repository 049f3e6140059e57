// include/kws/perturb.h

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

#ifndef KWS_PERTURB_H_
#define KWS_PERTURB_H_

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "kws/audio.h"

namespace kws {

// Hann-windowed STFT geometry shared by the time-scale and pitch operations.
struct StftConfig {
  int frame_len = 512;
  int hop = 128;
  int fft_size = 512;

  // 32 ms frames, 8 ms hop.
  static StftConfig ForRate(int sample_rate);
  // Throws kInvalidArgument unless 0 < hop <= frame_len <= fft_size and the
  // squared Hann window overlap-adds to a constant within 1e-10.
  void Validate() const;
};

// RTISI-LA settings: look-ahead frames and per-frame Griffin-Lim iterations.
struct RtisiOptions {
  int look_ahead = 2;
  int iterations = 8;
};

struct MixResult {
  Waveform wave;
  double gain = 0.0;
  bool clipped = false;  // true if any sample was hard-limited to [-1, 1]
};

// Adds noise scaled to the requested SNR (dB). Noise is looped or truncated to
// the speech length, starting at offset 0, or at a seeded random offset when
// `seed` is set. The SNR is controlled on the unclipped sum.
MixResult MixNoise(const Waveform &speech, const Waveform &noise, double snr_db,
                   std::optional<uint64_t> seed = std::nullopt);

// Time-scale modification: output duration = input duration / factor, pitch
// preserved. Magnitudes are interpolated along time and phase is rebuilt with
// real-time iterative spectrogram inversion with look-ahead.
Waveform ModifyRate(const Waveform &wave, double factor, const StftConfig &cfg,
                    const RtisiOptions &opts = {});

// Scales the fundamental by `factor` keeping duration: resample by 1/factor,
// then time-scale by 1/factor.
Waveform ModifyPitch(const Waveform &wave, double factor, const StftConfig &cfg,
                     const RtisiOptions &opts = {});

// Formant shift by LP pole-angle warping: every pole angle is multiplied by
// (1 + alpha), magnitudes kept, so alpha = 0.1 raises formants by 10%.
// lp_order <= 0 selects 2 + sample_rate / 1000.
Waveform ModifyFormants(const Waveform &wave, double alpha, int lp_order = 0);

// Building blocks, exposed for tests and diagnostics.

// Autocorrelation-method LPC via Levinson-Durbin. Returns a[0..order] with
// a[0] = 1, so that A(z) = sum a[k] z^-k.
std::vector<double> LpcAutocorrelation(const std::vector<double> &frame, int order);

// Multiplies pole angles of 1/A(z) by (1 + alpha); poles with magnitude >= 1
// afterwards are pulled back to 0.998. Always returns real coefficients.
std::vector<double> WarpLpcPoles(const std::vector<double> &lpc, double alpha);

// Roots of A(z) (the all-pole filter's poles).
std::vector<std::complex<double>> LpcPoles(const std::vector<double> &lpc);

// Frequency (Hz) of the peak of |1/A(e^jw)| on a 1 Hz grid up to Nyquist.
double LpcPeakFrequency(const std::vector<double> &lpc, int sample_rate);

double SignalPower(const std::vector<double> &x);

}  // namespace kws

#endif  // KWS_PERTURB_H_

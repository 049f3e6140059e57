// src/perturb.cc

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

#include "kws/perturb.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

#include "fft.h"
#include "kws/error.h"

namespace kws {

namespace {

// Periodic Hann, which overlap-adds exactly for hops dividing the frame.
std::vector<double> HannWindow(int n) {
  std::vector<double> w(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);
  return w;
}

double PrincipalArg(double x) {
  return x - 2.0 * M_PI * std::round(x / (2.0 * M_PI));
}

void CheckFactor(double factor) {
  if (!(factor > 0.5 && factor < 2.0))
    Fail(ErrorCode::kFactorOutOfRange, "factor " + std::to_string(factor) + " outside (0.5, 2.0)");
}

}  // namespace

StftConfig StftConfig::ForRate(int sample_rate) {
  StftConfig cfg;
  cfg.frame_len = static_cast<int>(std::lround(0.032 * sample_rate));
  cfg.hop = static_cast<int>(std::lround(0.008 * sample_rate));
  cfg.fft_size = 1;
  while (cfg.fft_size < cfg.frame_len) cfg.fft_size *= 2;
  return cfg;
}

void StftConfig::Validate() const {
  if (!(hop > 0 && hop <= frame_len && frame_len <= fft_size))
    Fail(ErrorCode::kInvalidArgument, "STFT config needs 0 < hop <= frame_len <= fft_size");
  std::vector<double> w = HannWindow(frame_len);
  std::vector<double> sum(static_cast<size_t>(hop), 0.0);
  for (int i = 0; i < frame_len; ++i) sum[static_cast<size_t>(i % hop)] += w[static_cast<size_t>(i)] * w[static_cast<size_t>(i)];
  auto [lo, hi] = std::minmax_element(sum.begin(), sum.end());
  if (*hi - *lo > 1e-10)
    Fail(ErrorCode::kInvalidArgument, "squared Hann window is not COLA for this hop");
}

double SignalPower(const std::vector<double> &x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

MixResult MixNoise(const Waveform &speech, const Waveform &noise, double snr_db,
                   std::optional<uint64_t> seed) {
  if (speech.sample_rate != noise.sample_rate)
    Fail(ErrorCode::kRateMismatch, std::to_string(speech.sample_rate) + " vs " +
                                       std::to_string(noise.sample_rate));
  if (!std::isfinite(snr_db)) Fail(ErrorCode::kInvalidArgument, "SNR must be finite");
  const double speech_power = SignalPower(speech.samples);
  if (!(speech_power > 0.0)) Fail(ErrorCode::kSilentSpeech, speech.id);
  if (noise.samples.empty()) Fail(ErrorCode::kSilentNoise, noise.id + " is empty");

  const size_t n = speech.samples.size();
  const size_t noise_len = noise.samples.size();
  size_t offset = 0;
  if (seed) {
    std::mt19937_64 rng(*seed);
    offset = std::uniform_int_distribution<size_t>(0, noise_len - 1)(rng);
  }
  std::vector<double> looped(n);
  for (size_t i = 0; i < n; ++i) looped[i] = noise.samples[(offset + i) % noise_len];
  const double noise_power = SignalPower(looped);
  if (!(noise_power > 0.0)) Fail(ErrorCode::kSilentNoise, noise.id);

  MixResult result;
  result.gain = std::sqrt(speech_power / (noise_power * std::pow(10.0, snr_db / 10.0)));
  result.wave.id = speech.id;
  result.wave.sample_rate = speech.sample_rate;
  result.wave.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double v = speech.samples[i] + result.gain * looped[i];
    if (v > 1.0 || v < -1.0) {
      result.clipped = true;
      v = std::clamp(v, -1.0, 1.0);
    }
    result.wave.samples[i] = v;
  }
  return result;
}

namespace {

// Identity phase locking: bins are grouped around local magnitude peaks and
// each non-peak bin keeps its analysis-frame phase offset from its peak.
void LockPhases(const std::vector<double> &mag, const std::vector<std::complex<double>> &analysis,
                std::vector<double> *phase) {
  const int bins = static_cast<int>(mag.size());
  const double floor = 1e-9 * *std::max_element(mag.begin(), mag.end());
  std::vector<int> peaks;
  for (int k = 0; k < bins; ++k) {
    double left = k > 0 ? mag[k - 1] : -1.0;
    double right = k + 1 < bins ? mag[k + 1] : -1.0;
    if (mag[k] > floor && mag[k] > left && mag[k] >= right) peaks.push_back(k);
  }
  if (peaks.empty()) return;
  size_t region = 0;
  for (int k = 0; k < bins; ++k) {
    // Region boundary: the magnitude minimum between consecutive peaks.
    while (region + 1 < peaks.size()) {
      auto lo = mag.begin() + peaks[region];
      auto hi = mag.begin() + peaks[region + 1];
      int boundary = static_cast<int>(std::min_element(lo, hi) - mag.begin());
      if (k > boundary) ++region; else break;
    }
    int p = peaks[region];
    if (k != p) (*phase)[k] = (*phase)[p] + std::arg(analysis[k]) - std::arg(analysis[p]);
  }
}

}  // namespace

Waveform ModifyRate(const Waveform &wave, double factor, const StftConfig &cfg,
                    const RtisiOptions &opts) {
  CheckFactor(factor);
  cfg.Validate();
  const int len = cfg.frame_len;
  const int hop = cfg.hop;
  const int pad = len - hop;
  const std::vector<double> win = HannWindow(len);
  RealFft fft(cfg.fft_size);
  const int bins = fft.num_bins();

  // Analysis on the zero-padded input.
  const int in_len = static_cast<int>(wave.samples.size());
  std::vector<double> padded(in_len + 2 * pad, 0.0);
  std::copy(wave.samples.begin(), wave.samples.end(), padded.begin() + pad);
  const int num_in = 1 + (static_cast<int>(padded.size()) - len + hop - 1) / hop;
  padded.resize((num_in - 1) * hop + len, 0.0);
  std::vector<std::vector<std::complex<double>>> spec(num_in);
  std::vector<double> frame(len);
  for (int i = 0; i < num_in; ++i) {
    for (int n = 0; n < len; ++n) frame[n] = win[n] * padded[i * hop + n];
    fft.Forward(frame, &spec[i]);
  }
  // Per-bin phase advance over one hop between frames j and j+1, i.e. the
  // instantaneous frequency at j + 0.5.
  std::vector<std::vector<double>> pair_advance(std::max(1, num_in - 1), std::vector<double>(bins, 0.0));
  for (int j = 0; j + 1 < num_in; ++j)
    for (int k = 0; k < bins; ++k) {
      const double expected = 2.0 * M_PI * k * hop / cfg.fft_size;
      pair_advance[j][k] = expected + PrincipalArg(std::arg(spec[j + 1][k]) - std::arg(spec[j][k]) - expected);
    }

  // Output frame m is centred on the input instant factor * (its own output
  // time); q is that instant in input-frame units.
  const int out_len = static_cast<int>(std::lround(in_len / factor));
  const int num_out = 1 + (out_len + 2 * pad - len + hop - 1) / hop;
  const int buf_len = (num_out - 1) * hop + len;
  std::vector<double> q_of(num_out);
  for (int m = 0; m < num_out; ++m) {
    const double centre_out = m * hop - pad + len / 2.0;
    q_of[m] = std::clamp((factor * centre_out + pad - len / 2.0) / hop, 0.0, num_in - 1.0);
  }

  std::vector<std::vector<double>> target(num_out, std::vector<double>(bins));
  std::vector<std::vector<double>> advance(num_out, std::vector<double>(bins));
  const int last_pair = std::max(0, num_in - 2);
  for (int m = 0; m < num_out; ++m) {
    const double q = q_of[m];
    const int lo = static_cast<int>(std::floor(q));
    const int hi = std::min(lo + 1, num_in - 1);
    const double mu = q - lo;
    for (int k = 0; k < bins; ++k)
      target[m][k] = (1.0 - mu) * std::abs(spec[lo][k]) + mu * std::abs(spec[hi][k]);
    // The step into frame m covers the input interval between the previous
    // and current mapped instants; use the frequency at its midpoint.
    const double mid = m > 0 ? 0.5 * (q + q_of[m - 1]) : q;
    const double r = std::clamp(mid - 0.5, 0.0, static_cast<double>(last_pair));
    const int j0 = static_cast<int>(std::floor(r));
    const int j1 = std::min(j0 + 1, last_pair);
    const double nu = r - j0;
    for (int k = 0; k < bins; ++k)
      advance[m][k] = (1.0 - nu) * pair_advance[j0][k] + nu * pair_advance[j1][k];
  }

  // Initial phases follow a phase-locked vocoder trajectory anchored at the
  // first output frame that maps onto an input frame lying fully inside the
  // signal, where the analysis phase is not biased by the zero padding.
  const int first_full = std::min((pad + hop - 1) / hop, num_in - 1);
  int anchor = 0;
  while (anchor + 1 < num_out && q_of[anchor] < first_full) ++anchor;
  std::vector<std::vector<double>> phase(num_out, std::vector<double>(bins));
  auto nearest = [&](int m) -> const std::vector<std::complex<double>> & {
    return spec[static_cast<int>(std::lround(q_of[m]))];
  };
  {
    const int near = static_cast<int>(std::lround(q_of[anchor]));
    for (int k = 0; k < bins; ++k)
      phase[anchor][k] = std::arg(spec[near][k]) + (anchor - near) * advance[anchor][k];
  }
  for (int m = anchor + 1; m < num_out; ++m) {
    for (int k = 0; k < bins; ++k) phase[m][k] = phase[m - 1][k] + advance[m][k];
    LockPhases(target[m], nearest(m), &phase[m]);
  }
  for (int m = anchor - 1; m >= 0; --m) {
    for (int k = 0; k < bins; ++k) phase[m][k] = phase[m + 1][k] - advance[m + 1][k];
    LockPhases(target[m], nearest(m), &phase[m]);
  }

  // RTISI-LA. acc holds the sum of w * frame estimates and wacc the matching
  // sum of w^2, so the current reconstruction is acc / wacc.
  std::vector<double> acc(buf_len, 0.0);
  std::vector<double> wacc(buf_len, 0.0);
  std::vector<std::vector<double>> est(num_out);
  std::vector<std::complex<double>> bins_buf(bins);
  std::vector<std::complex<double>> seg_spec;
  std::vector<double> time_buf;

  auto set_estimate = [&](int m, const std::vector<double> &frame_est) {
    auto &cur = est[m];
    const int base = m * hop;
    for (int n = 0; n < len; ++n) {
      if (!cur.empty()) acc[base + n] -= win[n] * cur[n];
      acc[base + n] += win[n] * frame_est[n];
    }
    cur.assign(frame_est.begin(), frame_est.begin() + len);
  };
  // Target magnitude with the phase of `src` (or of `phases` when given).
  auto synthesize = [&](int m, const std::vector<std::complex<double>> *src,
                        const std::vector<double> *phases) {
    for (int k = 0; k < bins; ++k) {
      if (phases) {
        bins_buf[k] = std::polar(target[m][k], (*phases)[k]);
      } else {
        const double a = std::abs((*src)[k]);
        bins_buf[k] = a > 0.0 ? (*src)[k] * (target[m][k] / a) : std::complex<double>(target[m][k], 0.0);
      }
    }
    fft.Inverse(bins_buf, &time_buf);
    return time_buf;
  };
  auto refine = [&](int m) {
    const int base = m * hop;
    for (int n = 0; n < len; ++n) {
      const double wsum = wacc[base + n];
      frame[n] = win[n] * (wsum > 1e-12 ? acc[base + n] / wsum : 0.0);
    }
    fft.Forward(frame, &seg_spec);
    set_estimate(m, synthesize(m, &seg_spec, nullptr));
  };
  auto add_frame = [&](int m) {
    for (int n = 0; n < len; ++n) wacc[m * hop + n] += win[n] * win[n];
    set_estimate(m, synthesize(m, nullptr, &phase[m]));
  };

  const int look = std::max(0, opts.look_ahead);
  for (int m = 0; m <= std::min(look, num_out - 1); ++m) add_frame(m);
  for (int m = 0; m < num_out; ++m) {
    const int last = std::min(m + look, num_out - 1);
    for (int it = 0; it < opts.iterations; ++it)
      for (int j = m; j <= last; ++j) refine(j);
    // Frame m is committed; bring in the next look-ahead frame.
    if (m + look + 1 < num_out) add_frame(m + look + 1);
  }

  Waveform out;
  out.id = wave.id;
  out.sample_rate = wave.sample_rate;
  out.samples.resize(out_len);
  for (int i = 0; i < out_len; ++i) {
    const int p = i + pad;
    out.samples[i] = wacc[p] > 1e-12 ? acc[p] / wacc[p] : 0.0;
  }
  return out;
}

Waveform ModifyPitch(const Waveform &wave, double factor, const StftConfig &cfg,
                     const RtisiOptions &opts) {
  CheckFactor(factor);
  const int stretched_rate = static_cast<int>(std::lround(wave.sample_rate / factor));
  Waveform stretched = Resample(wave, stretched_rate);
  stretched.sample_rate = wave.sample_rate;
  if (wave.samples.empty()) return stretched;
  // Exact rate factor that restores the original length.
  const double rate = static_cast<double>(stretched.samples.size()) / wave.samples.size();
  Waveform out = ModifyRate(stretched, rate, cfg, opts);
  out.samples.resize(wave.samples.size(), 0.0);
  return out;
}

std::vector<double> LpcAutocorrelation(const std::vector<double> &frame, int order) {
  std::vector<double> a(static_cast<size_t>(order + 1), 0.0);
  a[0] = 1.0;
  std::vector<double> r(static_cast<size_t>(order + 1), 0.0);
  for (int k = 0; k <= order; ++k)
    for (size_t n = static_cast<size_t>(k); n < frame.size(); ++n)
      r[static_cast<size_t>(k)] += frame[n] * frame[n - static_cast<size_t>(k)];
  if (r[0] <= 0.0) return a;
  r[0] *= 1.0 + 1e-9;  // white-noise correction keeps the recursion well-conditioned

  double err = r[0];
  std::vector<double> prev(a);
  for (int i = 1; i <= order; ++i) {
    double acc = r[static_cast<size_t>(i)];
    for (int j = 1; j < i; ++j) acc += prev[static_cast<size_t>(j)] * r[static_cast<size_t>(i - j)];
    double k = -acc / err;
    a[static_cast<size_t>(i)] = k;
    for (int j = 1; j < i; ++j)
      a[static_cast<size_t>(j)] = prev[static_cast<size_t>(j)] + k * prev[static_cast<size_t>(i - j)];
    err *= (1.0 - k * k);
    if (err <= 0.0) break;
    prev = a;
  }
  return a;
}

std::vector<std::complex<double>> LpcPoles(const std::vector<double> &lpc) {
  const int p = static_cast<int>(lpc.size()) - 1;
  if (p <= 0) return {};
  // Companion matrix of z^p + a1 z^{p-1} + ... + ap.
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) companion(0, j) = -lpc[static_cast<size_t>(j + 1)];
  for (int i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  std::vector<std::complex<double>> roots(static_cast<size_t>(p));
  for (int i = 0; i < p; ++i) roots[static_cast<size_t>(i)] = solver.eigenvalues()(i);
  return roots;
}

std::vector<double> WarpLpcPoles(const std::vector<double> &lpc, double alpha) {
  const std::vector<std::complex<double>> poles = LpcPoles(lpc);
  constexpr double kMaxRadius = 0.998;
  constexpr double kAngleMargin = 1e-3;
  std::vector<double> poly{1.0};
  auto multiply = [&poly](const std::vector<double> &factor) {
    std::vector<double> next(poly.size() + factor.size() - 1, 0.0);
    for (size_t i = 0; i < poly.size(); ++i)
      for (size_t j = 0; j < factor.size(); ++j) next[i + j] += poly[i] * factor[j];
    poly.swap(next);
  };
  for (const auto &z : poles) {
    double radius = std::abs(z);
    const bool is_real = std::abs(z.imag()) <= 1e-9 * std::max(1.0, radius);
    if (is_real) {
      double v = z.real();
      if (std::abs(v) >= 1.0) v = std::copysign(kMaxRadius, v);
      multiply({1.0, -v});
    } else if (z.imag() > 0.0) {
      // The conjugate partner (imag < 0) is regenerated here and skipped.
      double angle = std::clamp(std::arg(z) * (1.0 + alpha), kAngleMargin, M_PI - kAngleMargin);
      if (radius >= 1.0) radius = kMaxRadius;
      multiply({1.0, -2.0 * radius * std::cos(angle), radius * radius});
    }
  }
  poly.resize(lpc.size(), 0.0);
  return poly;
}

double LpcPeakFrequency(const std::vector<double> &lpc, int sample_rate) {
  double best_f = 0.0, best_mag = -1.0;
  for (int f = 0; f <= sample_rate / 2; ++f) {
    double w = 2.0 * M_PI * f / sample_rate;
    std::complex<double> acc(0.0, 0.0);
    for (size_t k = 0; k < lpc.size(); ++k)
      acc += lpc[k] * std::polar(1.0, -w * static_cast<double>(k));
    double mag = 1.0 / std::max(std::abs(acc), 1e-300);
    if (mag > best_mag) {
      best_mag = mag;
      best_f = f;
    }
  }
  return best_f;
}

Waveform ModifyFormants(const Waveform &wave, double alpha, int lp_order) {
  if (!(alpha >= -0.3 && alpha <= 0.3))
    Fail(ErrorCode::kAlphaOutOfRange, "alpha " + std::to_string(alpha) + " outside [-0.3, 0.3]");
  ValidateWaveform(wave);
  const int order = lp_order > 0 ? lp_order
                                 : 2 + static_cast<int>(std::lround(wave.sample_rate / 1000.0));
  // 30 ms frames at 50% overlap; the periodic Hann cross-fade sums to one.
  int frame_len = static_cast<int>(std::lround(0.03 * wave.sample_rate));
  frame_len += frame_len % 2;
  const int hop = frame_len / 2;
  const int warm = hop;

  const int n = static_cast<int>(wave.samples.size());
  // x[hop + i] is the input; one hop of zeros on each side so every sample is
  // covered by two frames.
  const int total = n + 2 * hop;
  std::vector<double> x(static_cast<size_t>(total + frame_len), 0.0);
  std::copy(wave.samples.begin(), wave.samples.end(), x.begin() + hop);
  std::vector<double> y_out(x.size(), 0.0);

  const std::vector<double> fade = HannWindow(frame_len);
  std::vector<double> analysis(static_cast<size_t>(frame_len));
  for (int i = 0; i < frame_len; ++i)
    analysis[static_cast<size_t>(i)] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (frame_len - 1));

  std::vector<double> seg(static_cast<size_t>(frame_len));
  std::vector<double> synth(static_cast<size_t>(frame_len + warm));
  for (int start = 0; start + hop < total; start += hop) {
    for (int i = 0; i < frame_len; ++i)
      seg[static_cast<size_t>(i)] = analysis[static_cast<size_t>(i)] * x[static_cast<size_t>(start + i)];
    const std::vector<double> a = LpcAutocorrelation(seg, order);
    const std::vector<double> b = WarpLpcPoles(a, alpha);

    // Inverse-filter then resynthesize over [start - warm, start + frame_len),
    // seeding the synthesis memory with the input history.
    auto input_at = [&](int idx) { return idx >= 0 ? x[static_cast<size_t>(idx)] : 0.0; };
    const int from = start - warm;
    for (int t = 0; t < frame_len + warm; ++t) {
      const int idx = from + t;
      double e = 0.0;
      for (int k = 0; k <= order; ++k) e += a[static_cast<size_t>(k)] * input_at(idx - k);
      double yv = e;
      for (int k = 1; k <= order; ++k) {
        double past = (t - k >= 0) ? synth[static_cast<size_t>(t - k)] : input_at(idx - k);
        yv -= b[static_cast<size_t>(k)] * past;
      }
      synth[static_cast<size_t>(t)] = yv;
    }
    for (int i = 0; i < frame_len; ++i)
      y_out[static_cast<size_t>(start + i)] += fade[static_cast<size_t>(i)] * synth[static_cast<size_t>(warm + i)];
  }

  Waveform out;
  out.id = wave.id;
  out.sample_rate = wave.sample_rate;
  out.samples.assign(y_out.begin() + hop, y_out.begin() + hop + n);
  return out;
}

}  // namespace kws

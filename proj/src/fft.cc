// src/fft.cc

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

#include "fft.h"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

namespace kws {

namespace {
// The FFTW planner is not thread-safe.
std::mutex &PlannerMutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(int n) : n_(n) {
  std::lock_guard<std::mutex> lock(PlannerMutex());
  time_ = fftw_alloc_real(static_cast<size_t>(n));
  freq_ = reinterpret_cast<std::complex<double> *>(fftw_alloc_complex(static_cast<size_t>(n / 2 + 1)));
  auto *f = reinterpret_cast<fftw_complex *>(freq_);
  forward_plan_ = fftw_plan_dft_r2c_1d(n, time_, f, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(n, f, time_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(PlannerMutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  fftw_free(time_);
  fftw_free(freq_);
}

void RealFft::Forward(const std::vector<double> &in, std::vector<std::complex<double>> *out) {
  size_t m = std::min(in.size(), static_cast<size_t>(n_));
  std::copy(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(m), time_);
  std::fill(time_ + m, time_ + n_, 0.0);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  out->assign(freq_, freq_ + num_bins());
}

void RealFft::Inverse(const std::vector<std::complex<double>> &in, std::vector<double> *out) {
  // c2r destroys its input, so copy into the owned buffer first.
  std::copy(in.begin(), in.begin() + num_bins(), freq_);
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  out->resize(static_cast<size_t>(n_));
  const double scale = 1.0 / n_;
  for (int i = 0; i < n_; ++i) (*out)[static_cast<size_t>(i)] = time_[i] * scale;
}

}  // namespace kws

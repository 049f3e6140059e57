// src/fft.h

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

#ifndef KWS_SRC_FFT_H_
#define KWS_SRC_FFT_H_

#include <complex>
#include <vector>

namespace kws {

// Real-input FFT of fixed size backed by FFTW. Plans use FFTW_ESTIMATE, which
// gives bit-identical output across runs.
// Instances are not shareable across threads; make one per thread.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft &) = delete;
  RealFft &operator=(const RealFft &) = delete;

  int size() const { return n_; }
  int num_bins() const { return n_ / 2 + 1; }

  // in has size() samples (shorter input is zero-padded); out gets num_bins().
  void Forward(const std::vector<double> &in, std::vector<std::complex<double>> *out);
  // Inverse of Forward, including the 1/n scale.
  void Inverse(const std::vector<std::complex<double>> &in, std::vector<double> *out);

 private:
  int n_;
  double *time_;
  std::complex<double> *freq_;
  void *forward_plan_;
  void *inverse_plan_;
};

}  // namespace kws

#endif  // KWS_SRC_FFT_H_

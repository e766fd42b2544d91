// Copyright 2026 The tonemdd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace tonemdd::signal {

// Real-to-complex / complex-to-real transform pair of a fixed size.
// Plans use FFTW_ESTIMATE so results do not depend on planner timing.
class RealFft {
 public:
  explicit RealFft(std::size_t size)
      : size_(size),
        time_(static_cast<double*>(fftw_malloc(sizeof(double) * size))),
        freq_(static_cast<fftw_complex*>(
            fftw_malloc(sizeof(fftw_complex) * (size / 2 + 1)))) {
    const int n = static_cast<int>(size);
    forward_ = fftw_plan_dft_r2c_1d(n, time_, freq_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, freq_, time_, FFTW_ESTIMATE);
  }

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  ~RealFft() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(time_);
    fftw_free(freq_);
  }

  std::size_t size() const { return size_; }
  std::size_t bins() const { return size_ / 2 + 1; }

  // Zero-pads `input` to size() and returns its spectrum.
  std::vector<std::complex<double>> forward(std::span<const double> input) {
    for (std::size_t i = 0; i < size_; ++i) {
      time_[i] = i < input.size() ? input[i] : 0.0;
    }
    fftw_execute(forward_);
    std::vector<std::complex<double>> out(bins());
    for (std::size_t k = 0; k < bins(); ++k) {
      out[k] = {freq_[k][0], freq_[k][1]};
    }
    return out;
  }

  // Inverse transform, normalized so inverse(forward(x)) == x.
  std::vector<double> inverse(std::span<const std::complex<double>> spectrum) {
    for (std::size_t k = 0; k < bins(); ++k) {
      freq_[k][0] = spectrum[k].real();
      freq_[k][1] = spectrum[k].imag();
    }
    fftw_execute(inverse_);
    std::vector<double> out(time_, time_ + size_);
    const double scale = 1.0 / static_cast<double>(size_);
    for (double& v : out) v *= scale;
    return out;
  }

 private:
  std::size_t size_;
  double* time_;
  fftw_complex* freq_;
  fftw_plan forward_{};
  fftw_plan inverse_{};
};

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace tonemdd::signal

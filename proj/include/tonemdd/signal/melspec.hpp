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

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "tonemdd/common/error.hpp"
#include "tonemdd/signal/fft.hpp"
#include "tonemdd/signal/pitch.hpp"
#include "tonemdd/signal/waveform.hpp"

namespace tonemdd::signal {

struct LogMelOptions {
  int n_mels = 40;
  int window = 400;  // 25 ms at 16 kHz
  int hop = 160;     // 10 ms
  int n_fft = 512;
  double f_min = 0.0;  // lowest filter edge in Hz
  double log_floor = 1e-10;
};

// Row-major [frames x n_mels] log-mel energies. Frame i is centered on
// sample i * hop, so frames = floor(n / hop) + 1.
struct LogMel {
  std::size_t frames = 0;
  int n_mels = 0;
  std::vector<double> data;
};

inline std::vector<std::vector<double>> mel_filterbank(const LogMelOptions& o,
                                                       int sample_rate) {
  const int bins = o.n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(o.f_min);
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(o.n_mels + 2);
  for (int i = 0; i < o.n_mels + 2; ++i) {
    double mel = mel_lo + (mel_hi - mel_lo) * i / (o.n_mels + 1);
    edges[i] = 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
  }
  std::vector<std::vector<double>> fb(o.n_mels, std::vector<double>(bins, 0.0));
  for (int m = 0; m < o.n_mels; ++m) {
    for (int k = 0; k < bins; ++k) {
      double hz = static_cast<double>(k) * sample_rate / o.n_fft;
      double up = (hz - edges[m]) / (edges[m + 1] - edges[m]);
      double down = (edges[m + 2] - hz) / (edges[m + 2] - edges[m + 1]);
      fb[m][k] = std::max(0.0, std::min(up, down));
    }
  }
  return fb;
}

inline LogMel log_mel(const Waveform& w, const LogMelOptions& o = {}) {
  validate(w);
  if (w.samples.size() < static_cast<std::size_t>(o.window)) {
    fail(ErrorCode::kAudioTooShort, "audio shorter than one analysis window");
  }
  const auto n = static_cast<std::ptrdiff_t>(w.samples.size());
  LogMel out;
  out.frames = w.samples.size() / o.hop + 1;
  out.n_mels = o.n_mels;
  out.data.resize(out.frames * o.n_mels);

  std::vector<double> hann(o.window);
  for (int i = 0; i < o.window; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / o.window);
  }
  const auto fb = mel_filterbank(o, w.sample_rate);
  RealFft fft(o.n_fft);
  std::vector<double> frame(o.window);
  for (std::size_t f = 0; f < out.frames; ++f) {
    auto start = static_cast<std::ptrdiff_t>(f * o.hop) - o.window / 2;
    for (int i = 0; i < o.window; ++i) {
      auto k = start + i;
      frame[i] = (k >= 0 && k < n) ? w.samples[k] * hann[i] : 0.0;
    }
    auto spec = fft.forward(frame);
    for (int m = 0; m < o.n_mels; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < spec.size(); ++k) {
        if (fb[m][k] != 0.0) e += fb[m][k] * std::norm(spec[k]);
      }
      out.data[f * o.n_mels + m] = std::log(std::max(e, o.log_floor));
    }
  }
  return out;
}

}  // namespace tonemdd::signal

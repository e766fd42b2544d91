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

// F0 estimation in the style of DIO (Distributed Inline-filter Operation):
// a bank of Nuttall low-pass filters, four interval-based period estimates
// per band, and per-frame selection of the most stable candidate.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "tonemdd/common/error.hpp"
#include "tonemdd/signal/fft.hpp"
#include "tonemdd/signal/waveform.hpp"

namespace tonemdd::signal {

inline constexpr double kDefaultF0Floor = 40.0;
inline constexpr double kDefaultF0Ceil = 800.0;

struct PitchTrack {
  int hop_ms = 10;
  std::vector<double> f0_hz;  // 0.0 where unvoiced
  std::vector<bool> voiced;

  std::size_t size() const { return f0_hz.size(); }
};

struct DioOptions {
  double channels_in_octave = 2.0;
  // Frames whose best candidate has std/mean above this are unvoiced.
  double max_instability = 0.05;
  // Frames quieter than the loudest frame by more than this are unvoiced.
  double silence_db = -40.0;
  double min_rms = 1e-4;
};

inline bool is_supported_hop(int hop_ms) {
  return hop_ms == 10 || hop_ms == 20 || hop_ms == 40;
}

// floor(duration_ms / hop_ms) + 1
inline std::size_t pitch_frame_count(std::size_t n_samples, int sample_rate,
                                     int hop_ms) {
  return n_samples * 1000 /
             (static_cast<std::size_t>(sample_rate) *
              static_cast<std::size_t>(hop_ms)) +
         1;
}

namespace dio_detail {

// Interval events: location (seconds) and the frequency implied by the
// distance between consecutive negative-going zero crossings.
struct Events {
  std::vector<double> locations;
  std::vector<double> frequencies;
};

inline Events negative_crossings(std::span<const double> x, double fs) {
  std::vector<double> edges;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (x[i] > 0.0 && x[i + 1] <= 0.0) {
      // linear interpolation of the crossing point
      edges.push_back(static_cast<double>(i) + x[i] / (x[i] - x[i + 1]));
    }
  }
  Events ev;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    ev.frequencies.push_back(fs / (edges[i + 1] - edges[i]));
    ev.locations.push_back((edges[i] + edges[i + 1]) / 2.0 / fs);
  }
  return ev;
}

// Linear interpolation; NaN outside the span of event locations.
inline double interpolate(const Events& ev, double t) {
  const auto& loc = ev.locations;
  if (loc.empty() || t < loc.front() || t > loc.back()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  auto it = std::upper_bound(loc.begin(), loc.end(), t);
  if (it == loc.end()) return ev.frequencies.back();
  auto hi = static_cast<std::size_t>(it - loc.begin());
  if (hi == 0) return ev.frequencies.front();
  std::size_t lo = hi - 1;
  double w = (t - loc[lo]) / (loc[hi] - loc[lo]);
  return ev.frequencies[lo] * (1.0 - w) + ev.frequencies[hi] * w;
}

inline std::vector<double> nuttall(std::size_t n) {
  std::vector<double> w(n);
  const double pi = std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    double t = (static_cast<double>(i) + 1.0 - (n + 1.0) / 2.0) / (n + 1.0);
    w[i] = 0.355768 + 0.487396 * std::cos(2.0 * pi * t) +
           0.144232 * std::cos(4.0 * pi * t) +
           0.012604 * std::cos(6.0 * pi * t);
  }
  return w;
}

struct Candidate {
  double f0 = 0.0;
  double instability = std::numeric_limits<double>::infinity();
};

}  // namespace dio_detail

inline PitchTrack estimate_f0(const Waveform& w, int hop_ms,
                              double f0_floor = kDefaultF0Floor,
                              double f0_ceil = kDefaultF0Ceil,
                              const DioOptions& opts = {}) {
  using namespace dio_detail;
  if (!is_supported_hop(hop_ms)) {
    fail(ErrorCode::kUnsupportedHop,
         "unsupported hop size " + std::to_string(hop_ms) + " ms");
  }
  validate(w);
  const double fs = w.sample_rate;
  if (!(f0_floor > 0.0 && f0_floor < f0_ceil && f0_ceil < fs / 2.0)) {
    fail(ErrorCode::kInvalidArgument, "need 0 < f0_floor < f0_ceil < fs/2");
  }
  const std::size_t n = w.samples.size();
  if (static_cast<double>(n) < 2.0 * fs / f0_floor) {
    fail(ErrorCode::kAudioTooShort,
         "audio too short: " + std::to_string(n) + " samples");
  }

  const std::size_t n_frames = pitch_frame_count(n, w.sample_rate, hop_ms);
  std::vector<double> frame_time(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    frame_time[i] = static_cast<double>(i * hop_ms) / 1000.0;
  }

  // Per-frame RMS over a +-20 ms window, for the silence gate.
  std::vector<double> rms(n_frames);
  const auto half_win = static_cast<std::ptrdiff_t>(0.02 * fs);
  double loudest = 0.0;
  for (std::size_t i = 0; i < n_frames; ++i) {
    auto center = static_cast<std::ptrdiff_t>(std::llround(frame_time[i] * fs));
    std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, center - half_win);
    std::ptrdiff_t hi =
        std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n), center + half_win);
    double acc = 0.0;
    for (std::ptrdiff_t k = lo; k < hi; ++k) acc += w.samples[k] * w.samples[k];
    rms[i] = hi > lo ? std::sqrt(acc / static_cast<double>(hi - lo)) : 0.0;
    loudest = std::max(loudest, rms[i]);
  }
  const double gate =
      std::max(opts.min_rms, loudest * std::pow(10.0, opts.silence_db / 20.0));

  const int n_bands =
      2 + static_cast<int>(std::log2(f0_ceil / f0_floor) * opts.channels_in_octave);
  std::vector<double> boundaries(n_bands);
  for (int b = 0; b < n_bands; ++b) {
    boundaries[b] = f0_floor * std::pow(2.0, b / opts.channels_in_octave);
  }

  // DC-removed signal spectrum, padded for the longest filter.
  std::vector<double> x(w.samples);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  for (double& v : x) v -= mean;
  const auto longest_half =
      static_cast<std::size_t>(std::lround(fs / boundaries.front() / 2.0));
  RealFft fft(next_pow2(n + 4 * longest_half + 1));
  const auto x_spec = fft.forward(x);

  std::vector<Candidate> best(n_frames);
  for (double boundary : boundaries) {
    const auto half = static_cast<std::size_t>(std::lround(fs / boundary / 2.0));
    auto h_spec = fft.forward(nuttall(4 * half));
    for (std::size_t k = 0; k < h_spec.size(); ++k) h_spec[k] *= x_spec[k];
    auto y = fft.inverse(h_spec);
    // Compensate the filter's group delay.
    std::vector<double> filtered(y.begin() + static_cast<std::ptrdiff_t>(2 * half),
                                 y.begin() + static_cast<std::ptrdiff_t>(2 * half + n));

    std::vector<double> buf(filtered);
    Events neg = negative_crossings(buf, fs);
    for (double& v : buf) v = -v;
    Events pos = negative_crossings(buf, fs);
    // Peaks and dips are zero crossings of the first difference.
    std::vector<double> diff(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) diff[i] = filtered[i] - filtered[i + 1];
    Events peak = negative_crossings(diff, fs);
    for (double& v : diff) v = -v;
    Events dip = negative_crossings(diff, fs);

    for (std::size_t i = 0; i < n_frames; ++i) {
      const double t = frame_time[i];
      const double est[4] = {interpolate(neg, t), interpolate(pos, t),
                             interpolate(peak, t), interpolate(dip, t)};
      if (std::any_of(std::begin(est), std::end(est),
                      [](double v) { return std::isnan(v); })) {
        continue;
      }
      const double m = (est[0] + est[1] + est[2] + est[3]) / 4.0;
      double ss = 0.0;
      for (double e : est) ss += (e - m) * (e - m);
      const double sd = std::sqrt(ss / 3.0);
      if (m > boundary || m < boundary / 2.0 || m > f0_ceil || m < f0_floor) {
        continue;
      }
      const double score = sd / m;
      if (score < best[i].instability) best[i] = {m, score};
    }
  }

  PitchTrack track;
  track.hop_ms = hop_ms;
  track.f0_hz.assign(n_frames, 0.0);
  track.voiced.assign(n_frames, false);
  for (std::size_t i = 0; i < n_frames; ++i) {
    const auto& c = best[i];
    if (rms[i] < gate || c.instability > opts.max_instability) continue;
    if (c.f0 < f0_floor || c.f0 > f0_ceil) continue;
    track.f0_hz[i] = c.f0;
    track.voiced[i] = true;
  }
  return track;
}

}  // namespace tonemdd::signal

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
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tonemdd/common/error.hpp"
#include "tonemdd/signal/dio.hpp"

namespace tonemdd::signal {

enum class PitchVariant { kRaw, kMel, kCoarse };

inline constexpr int kRawPitchVocab = 1600;
inline constexpr int kCoarsePitchVocab = 256;
inline constexpr int kHistogramBins = 50;

inline double hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

// Voiced frames mapped to mel, unvoiced frames stay 0.
inline std::vector<double> mel_scale(const PitchTrack& track) {
  std::vector<double> out(track.size(), 0.0);
  for (std::size_t i = 0; i < track.size(); ++i) {
    if (track.voiced[i]) out[i] = hz_to_mel(track.f0_hz[i]);
  }
  return out;
}

struct QuantizedPitch {
  std::vector<int> indices;
  int vocab_size = 0;
  PitchVariant variant = PitchVariant::kRaw;
};

// Corpus-level voiced-F0 statistics. Histogram covers [f0_floor, f0_ceil]
// in equal-width bins.
struct CorpusPitchStats {
  double min_hz = std::numeric_limits<double>::infinity();
  double max_hz = -std::numeric_limits<double>::infinity();
  double f0_floor = kDefaultF0Floor;
  double f0_ceil = kDefaultF0Ceil;
  std::array<std::size_t, kHistogramBins> histogram{};
  std::size_t voiced_frames = 0;

  void add(double hz) {
    min_hz = std::min(min_hz, hz);
    max_hz = std::max(max_hz, hz);
    double rel = (hz - f0_floor) / (f0_ceil - f0_floor);
    auto bin = static_cast<int>(std::floor(rel * kHistogramBins));
    histogram[std::clamp(bin, 0, kHistogramBins - 1)] += 1;
    ++voiced_frames;
  }

  // Order-independent: merge(a, b) == merge(b, a).
  void merge(const CorpusPitchStats& other) {
    min_hz = std::min(min_hz, other.min_hz);
    max_hz = std::max(max_hz, other.max_hz);
    for (int b = 0; b < kHistogramBins; ++b) histogram[b] += other.histogram[b];
    voiced_frames += other.voiced_frames;
  }

  double bin_center(int bin) const {
    double width = (f0_ceil - f0_floor) / kHistogramBins;
    return f0_floor + (bin + 0.5) * width;
  }

  int mode_bin() const {
    return static_cast<int>(std::max_element(histogram.begin(), histogram.end()) -
                            histogram.begin());
  }
};

inline CorpusPitchStats corpus_pitch_stats(std::span<const PitchTrack> tracks,
                                           double f0_floor = kDefaultF0Floor,
                                           double f0_ceil = kDefaultF0Ceil) {
  CorpusPitchStats stats;
  stats.f0_floor = f0_floor;
  stats.f0_ceil = f0_ceil;
  for (const auto& t : tracks) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.voiced[i]) stats.add(t.f0_hz[i]);
    }
  }
  if (stats.voiced_frames == 0) {
    fail(ErrorCode::kEmptyCorpus, "empty voiced corpus");
  }
  return stats;
}

inline int mel_pitch_vocab(double f0_ceil) {
  return 2 + static_cast<int>(std::lround(hz_to_mel(f0_ceil)));
}

inline int pitch_vocab_size(PitchVariant variant, double f0_ceil) {
  switch (variant) {
    case PitchVariant::kRaw: return kRawPitchVocab;
    case PitchVariant::kMel: return mel_pitch_vocab(f0_ceil);
    case PitchVariant::kCoarse: return kCoarsePitchVocab;
  }
  return 0;
}

// Maps per-frame values to embedding indices; a value of 0 marks an
// unvoiced frame and always maps to index 0.
//   raw    : values in Hz, index = round(hz) in [1, 1599]
//   mel    : values in mel, index = 1 + round(mel)
//   coarse : values in mel, min-max normalized by the corpus range (mapped
//            to mel), index = 1 + floor(norm * 254) in [1, 255]
inline QuantizedPitch quantize(std::span<const double> values, PitchVariant variant,
                               const CorpusPitchStats& stats) {
  QuantizedPitch q;
  q.variant = variant;
  q.vocab_size = pitch_vocab_size(variant, stats.f0_ceil);
  q.indices.assign(values.size(), 0);
  const bool any_voiced =
      std::any_of(values.begin(), values.end(), [](double v) { return v != 0.0; });
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::kInvalidArgument, "non-finite pitch value");
  }
  double lo = 0.0, hi = 0.0;
  if (variant == PitchVariant::kCoarse && any_voiced) {
    if (!(stats.max_hz > stats.min_hz)) {
      fail(ErrorCode::kDegenerateStats, "degenerate corpus statistics");
    }
    lo = hz_to_mel(stats.min_hz);
    hi = hz_to_mel(stats.max_hz);
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (v == 0.0) continue;
    long idx = 0;
    switch (variant) {
      case PitchVariant::kRaw:
        idx = std::clamp<long>(std::lround(v), 1, kRawPitchVocab - 1);
        break;
      case PitchVariant::kMel:
        idx = std::clamp<long>(1 + std::lround(v), 1, q.vocab_size - 1);
        break;
      case PitchVariant::kCoarse: {
        double norm = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
        idx = std::clamp<long>(1 + static_cast<long>(std::floor(norm * 254.0)), 1,
                               kCoarsePitchVocab - 1);
        break;
      }
    }
    q.indices[i] = static_cast<int>(idx);
  }
  return q;
}

// Full post-processing chain for one track: raw uses Hz directly, mel and
// coarse go through mel-scaling first.
inline QuantizedPitch quantize_track(const PitchTrack& track, PitchVariant variant,
                                     const CorpusPitchStats& stats) {
  if (variant == PitchVariant::kRaw) return quantize(track.f0_hz, variant, stats);
  return quantize(mel_scale(track), variant, stats);
}

inline std::string to_string(PitchVariant v) {
  switch (v) {
    case PitchVariant::kRaw: return "raw";
    case PitchVariant::kMel: return "mel";
    case PitchVariant::kCoarse: return "coarse";
  }
  return "raw";
}

inline nlohmann::json to_json(const PitchTrack& t, const std::string& utt_id) {
  nlohmann::json voiced = nlohmann::json::array();
  for (bool v : t.voiced) voiced.push_back(v);
  return {{"utt_id", utt_id}, {"hop_ms", t.hop_ms}, {"f0_hz", t.f0_hz}, {"voiced", voiced}};
}

inline PitchTrack pitch_track_from_json(const nlohmann::json& j) {
  PitchTrack t;
  t.hop_ms = j.at("hop_ms").get<int>();
  t.f0_hz = j.at("f0_hz").get<std::vector<double>>();
  for (const auto& v : j.at("voiced")) t.voiced.push_back(v.get<bool>());
  if (t.voiced.size() != t.f0_hz.size()) {
    fail(ErrorCode::kParse, "pitch track arrays differ in length");
  }
  return t;
}

inline nlohmann::json to_json(const CorpusPitchStats& s) {
  return {{"min_hz", s.min_hz},         {"max_hz", s.max_hz},
          {"f0_floor", s.f0_floor},     {"f0_ceil", s.f0_ceil},
          {"histogram", s.histogram},   {"voiced_frames", s.voiced_frames}};
}

inline CorpusPitchStats corpus_pitch_stats_from_json(const nlohmann::json& j) {
  CorpusPitchStats s;
  s.min_hz = j.at("min_hz").get<double>();
  s.max_hz = j.at("max_hz").get<double>();
  s.f0_floor = j.at("f0_floor").get<double>();
  s.f0_ceil = j.at("f0_ceil").get<double>();
  auto h = j.at("histogram").get<std::vector<std::size_t>>();
  if (h.size() != kHistogramBins) fail(ErrorCode::kParse, "histogram must have 50 bins");
  std::copy(h.begin(), h.end(), s.histogram.begin());
  s.voiced_frames = j.at("voiced_frames").get<std::size_t>();
  return s;
}

}  // namespace tonemdd::signal

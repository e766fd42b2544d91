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

// Synthetic tonal language: noise-burst initials and harmonic finals whose
// F0 follows one of five tone contours.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "tonemdd/common/error.hpp"
#include "tonemdd/common/json_fields.hpp"
#include "tonemdd/lexicon/phoneme.hpp"
#include "tonemdd/pipeline/manifest.hpp"
#include "tonemdd/signal/fft.hpp"
#include "tonemdd/signal/waveform.hpp"

namespace tonemdd::pipeline {

enum class ContourShape { kFlat, kRise, kDip, kFall, kShort };

inline std::string to_string(ContourShape s) {
  switch (s) {
    case ContourShape::kFlat: return "flat";
    case ContourShape::kRise: return "rise";
    case ContourShape::kDip: return "dip";
    case ContourShape::kFall: return "fall";
    case ContourShape::kShort: return "short";
  }
  return "?";
}

inline ContourShape contour_shape_from_string(const std::string& s) {
  for (auto c : {ContourShape::kFlat, ContourShape::kRise, ContourShape::kDip,
                 ContourShape::kFall, ContourShape::kShort}) {
    if (to_string(c) == s) return c;
  }
  fail(ErrorCode::kConfig, "synth.contours: unknown shape '" + s + "'");
}

struct ToneContour {
  double start_hz = 0.0;
  double end_hz = 0.0;
  ContourShape shape = ContourShape::kFlat;

  friend bool operator==(const ToneContour&, const ToneContour&) = default;

  // F0 at relative position tau in [0, 1]. A dip bottoms out at 70% of the
  // lower endpoint halfway through.
  double at(double tau) const {
    const double line = start_hz + (end_hz - start_hz) * tau;
    if (shape != ContourShape::kDip) return line;
    const double depth = 0.5 * (start_hz + end_hz) - 0.7 * std::min(start_hz, end_hz);
    return line - depth * std::sin(std::numbers::pi * tau);
  }
};

inline constexpr int kTones = 5;

struct InitialSpec {
  const char* name;
  double lo_hz, hi_hz;  // noise band
  double min_ms, max_ms;
};

struct FinalSpec {
  const char* name;
  std::array<double, 2> start;  // (F1, F2) at onset
  std::array<double, 2> end;    // (F1, F2) at offset; differs for diphthongs
};

inline const std::vector<InitialSpec>& initial_table() {
  static const std::vector<InitialSpec> t = {
      {"b", 200, 1200, 60, 75},  {"d", 2000, 4000, 60, 75}, {"g", 1000, 2500, 60, 75},
      {"s", 4000, 7000, 75, 90}, {"f", 2500, 7500, 75, 90}, {"h", 500, 3000, 75, 90},
  };
  return t;
}

inline const std::vector<FinalSpec>& final_table() {
  static const std::vector<FinalSpec> t = {
      {"a", {800, 1200}, {800, 1200}},  {"i", {300, 2300}, {300, 2300}},
      {"u", {350, 800}, {350, 800}},    {"e", {500, 1500}, {500, 1500}},
      {"o", {550, 900}, {550, 900}},    {"ai", {800, 1200}, {300, 2300}},
      {"ou", {550, 900}, {350, 800}},   {"ei", {500, 1500}, {300, 2300}},
  };
  return t;
}

struct SynthSpec {
  int n_initials = 4;
  int n_finals = 6;
  int min_syllables = 2;
  int max_syllables = 4;
  int n_train = 400;
  int n_dev = 50;
  int n_eval = 100;
  double p_err = 0.15;  // evaluation split only
  double speaker_min = 0.9;
  double speaker_max = 1.1;
  std::array<ToneContour, kTones> contours = {{
      {240, 240, ContourShape::kFlat},
      {160, 250, ContourShape::kRise},
      {170, 150, ContourShape::kDip},
      {260, 140, ContourShape::kFall},
      {190, 170, ContourShape::kShort},
  }};
  std::uint64_t seed = 1;

  void validate() const {
    auto bad = [](const std::string& m) { fail(ErrorCode::kConfig, "synth." + m); };
    if (n_initials < 1 || n_initials > static_cast<int>(initial_table().size())) {
      bad("n_initials: must be in [1, " + std::to_string(initial_table().size()) + "]");
    }
    if (n_finals < 1 || n_finals > static_cast<int>(final_table().size())) {
      bad("n_finals: must be in [1, " + std::to_string(final_table().size()) + "]");
    }
    if (min_syllables < 1 || max_syllables < min_syllables) {
      bad("min_syllables/max_syllables: need 1 <= min <= max");
    }
    if (n_train < 0 || n_dev < 0 || n_eval < 0) bad("n_train/n_dev/n_eval: must be >= 0");
    if (!(p_err >= 0.0 && p_err < 1.0)) bad("p_err: must be in [0, 1)");
    if (!(speaker_min > 0.0 && speaker_min <= speaker_max)) {
      bad("speaker_min/speaker_max: need 0 < min <= max");
    }
    for (int a = 0; a < kTones; ++a) {
      const auto& c = contours[a];
      if (!(c.start_hz >= 60.0 && c.end_hz >= 60.0 && c.start_hz <= 600.0 && c.end_hz <= 600.0)) {
        bad("contours: tone " + std::to_string(a + 1) + " endpoints outside [60, 600] Hz");
      }
      for (int b = 0; b < a; ++b) {
        if (contours[b] == c) bad("contours: tones " + std::to_string(b + 1) + " and " +
                                  std::to_string(a + 1) + " share a contour");
      }
    }
  }

  lexicon::Inventory inventory() const {
    lexicon::Inventory inv;
    for (int i = 0; i < n_initials; ++i) inv.add(initial_table()[i].name);
    for (int f = 0; f < n_finals; ++f) {
      for (int t = 1; t <= kTones; ++t) inv.add(final_table()[f].name + std::to_string(t));
    }
    return inv;
  }
};

inline nlohmann::json to_json(const SynthSpec& s) {
  nlohmann::json contours = nlohmann::json::array();
  for (const auto& c : s.contours) {
    contours.push_back({{"start_hz", c.start_hz}, {"end_hz", c.end_hz}, {"shape", to_string(c.shape)}});
  }
  return {{"n_initials", s.n_initials}, {"n_finals", s.n_finals},
          {"min_syllables", s.min_syllables}, {"max_syllables", s.max_syllables},
          {"n_train", s.n_train}, {"n_dev", s.n_dev}, {"n_eval", s.n_eval},
          {"p_err", s.p_err}, {"speaker_min", s.speaker_min},
          {"speaker_max", s.speaker_max}, {"contours", contours}, {"seed", s.seed}};
}

inline SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  reject_unknown_keys(j, to_json(s), "synth");
  read_field(j, "n_initials", s.n_initials, "synth");
  read_field(j, "n_finals", s.n_finals, "synth");
  read_field(j, "min_syllables", s.min_syllables, "synth");
  read_field(j, "max_syllables", s.max_syllables, "synth");
  read_field(j, "n_train", s.n_train, "synth");
  read_field(j, "n_dev", s.n_dev, "synth");
  read_field(j, "n_eval", s.n_eval, "synth");
  read_field(j, "p_err", s.p_err, "synth");
  read_field(j, "speaker_min", s.speaker_min, "synth");
  read_field(j, "speaker_max", s.speaker_max, "synth");
  read_field(j, "seed", s.seed, "synth");
  if (j.contains("contours")) {
    const auto& cs = j.at("contours");
    if (!cs.is_array() || cs.size() != kTones) {
      fail(ErrorCode::kConfig, "synth.contours: expected an array of 5 contours");
    }
    for (int t = 0; t < kTones; ++t) {
      const auto& c = cs[t];
      reject_unknown_keys(c, nlohmann::json{{"start_hz", 0}, {"end_hz", 0}, {"shape", ""}},
                          "synth.contours");
      read_field(c, "start_hz", s.contours[t].start_hz, "synth.contours");
      read_field(c, "end_hz", s.contours[t].end_hz, "synth.contours");
      std::string shape = to_string(s.contours[t].shape);
      read_field(c, "shape", shape, "synth.contours");
      s.contours[t].shape = contour_shape_from_string(shape);
    }
  }
  s.validate();
  return s;
}

enum class Split { kTrain, kDev, kEval };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kEval: return "eval";
  }
  return "?";
}

// One synthetic syllable: optional initial index, final index, tone 1..5.
struct Syllable {
  int initial = -1;
  int final_index = 0;
  int tone = 1;

  std::string text() const {
    std::string s = initial >= 0 ? initial_table()[initial].name : "";
    return s + final_table()[final_index].name + std::to_string(tone);
  }
};

struct SynthUtterance {
  std::string utt_id;
  std::vector<Syllable> canonical;
  std::vector<Syllable> annotated;
  double speaker_scale = 1.0;
  signal::Waveform audio;
};

namespace synth_detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Index in [0, n) different from `skip`.
inline int other_than(std::mt19937_64& rng, int n, int skip) {
  const int r = uniform_int(rng, 0, n - 2);
  return r >= skip ? r + 1 : r;
}

inline std::size_t ms_to_samples(double ms) {
  return static_cast<std::size_t>(std::lround(ms * signal::kModelSampleRate / 1000.0));
}

// Raised-cosine fade in/out applied in place.
inline void fade(std::vector<double>& x, double in_ms, double out_ms) {
  const std::size_t a = std::min(ms_to_samples(in_ms), x.size() / 2);
  const std::size_t r = std::min(ms_to_samples(out_ms), x.size() / 2);
  for (std::size_t i = 0; i < a; ++i) {
    x[i] *= 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / a);
  }
  for (std::size_t i = 0; i < r; ++i) {
    x[x.size() - 1 - i] *= 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / r);
  }
}

// Band-limited noise burst with unit RMS before fading.
inline std::vector<double> noise_burst(const InitialSpec& spec, std::mt19937_64& rng) {
  const std::size_t len = ms_to_samples(uniform(rng, spec.min_ms, spec.max_ms));
  const std::size_t n = signal::next_pow2(len);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> white(n);
  for (auto& v : white) v = gauss(rng);
  signal::RealFft fft(n);
  auto spec_bins = fft.forward(white);
  const double bin_hz = static_cast<double>(signal::kModelSampleRate) / static_cast<double>(n);
  for (std::size_t k = 0; k < spec_bins.size(); ++k) {
    const double hz = k * bin_hz;
    if (hz < spec.lo_hz || hz > spec.hi_hz) spec_bins[k] = 0.0;
  }
  auto shaped = fft.inverse(spec_bins);
  shaped.resize(len);
  double energy = 0.0;
  for (double v : shaped) energy += v * v;
  const double rms = std::sqrt(energy / static_cast<double>(len));
  for (auto& v : shaped) v /= rms > 0.0 ? rms : 1.0;
  fade(shaped, 5.0, 20.0);
  return shaped;
}

// Resonance gain of a two-formant envelope at `hz`.
inline double formant_gain(double hz, double f1, double f2) {
  auto peak = [hz](double f, double bw) {
    const double d = (hz - f) / bw;
    return 1.0 / (1.0 + d * d);
  };
  return 0.15 + peak(f1, 120.0) + 0.7 * peak(f2, 160.0);
}

// Harmonic series up to 4 kHz with phase accumulation along the contour.
inline std::vector<double> harmonic_final(const FinalSpec& spec, const ToneContour& contour,
                                          double speaker_scale, double duration_ms) {
  const std::size_t len = ms_to_samples(duration_ms);
  const double fs = signal::kModelSampleRate;
  std::vector<double> out(len, 0.0);
  constexpr int kMaxHarmonics = 40;
  std::array<double, kMaxHarmonics> phase{};
  for (std::size_t i = 0; i < len; ++i) {
    const double tau = len > 1 ? static_cast<double>(i) / static_cast<double>(len - 1) : 0.0;
    const double f0 = contour.at(tau) * speaker_scale;
    const double f1 = spec.start[0] + (spec.end[0] - spec.start[0]) * tau;
    const double f2 = spec.start[1] + (spec.end[1] - spec.start[1]) * tau;
    double s = 0.0;
    for (int k = 1; k <= kMaxHarmonics; ++k) {
      const double hz = k * f0;
      if (hz >= 4000.0) break;
      phase[k - 1] += 2.0 * std::numbers::pi * hz / fs;
      if (phase[k - 1] > 2.0 * std::numbers::pi) phase[k - 1] -= 2.0 * std::numbers::pi;
      s += formant_gain(hz, f1, f2) / std::pow(k, 0.6) * std::sin(phase[k - 1]);
    }
    out[i] = s;
  }
  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  for (auto& v : out) v /= peak > 0.0 ? peak : 1.0;
  fade(out, 15.0, 25.0);
  return out;
}

inline void append_silence(std::vector<double>& x, double ms) {
  x.insert(x.end(), ms_to_samples(ms), 0.0);
}

}  // namespace synth_detail

// Short-tone finals last 110-140 ms, all others 200-260 ms.
inline signal::Waveform render(const std::vector<Syllable>& syllables, const SynthSpec& spec,
                               double speaker_scale, std::mt19937_64& rng) {
  using namespace synth_detail;
  std::vector<double> x;
  append_silence(x, 100.0);
  for (std::size_t s = 0; s < syllables.size(); ++s) {
    const auto& syl = syllables[s];
    if (syl.initial >= 0) {
      auto burst = noise_burst(initial_table()[syl.initial], rng);
      for (auto& v : burst) v *= 0.3;
      x.insert(x.end(), burst.begin(), burst.end());
    }
    const auto& contour = spec.contours[syl.tone - 1];
    const double dur = contour.shape == ContourShape::kShort ? uniform(rng, 110.0, 140.0)
                                                              : uniform(rng, 200.0, 260.0);
    const auto voiced = harmonic_final(final_table()[syl.final_index], contour, speaker_scale, dur);
    x.insert(x.end(), voiced.begin(), voiced.end());
    if (s + 1 < syllables.size()) append_silence(x, uniform(rng, 30.0, 60.0));
  }
  append_silence(x, 100.0);
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  std::normal_distribution<double> floor_noise(0.0, 5e-4);
  for (auto& v : x) v = v * (0.5 / peak) + floor_noise(rng);
  signal::Waveform w;
  w.samples = std::move(x);
  return w;
}

// Deterministic in (spec.seed, split, index).
inline SynthUtterance synthesize(const SynthSpec& spec, Split split, int index) {
  using namespace synth_detail;
  std::mt19937_64 rng(splitmix64(spec.seed ^ splitmix64(static_cast<std::uint64_t>(split) << 32 |
                                                        static_cast<std::uint32_t>(index))));
  SynthUtterance u;
  char id[32];
  std::snprintf(id, sizeof(id), "%s_%04d", to_string(split).c_str(), index);
  u.utt_id = id;
  const int n = uniform_int(rng, spec.min_syllables, spec.max_syllables);
  for (int i = 0; i < n; ++i) {
    Syllable s;
    s.initial = uniform(rng, 0.0, 1.0) < 0.8 ? uniform_int(rng, 0, spec.n_initials - 1) : -1;
    s.final_index = uniform_int(rng, 0, spec.n_finals - 1);
    s.tone = uniform_int(rng, 1, kTones);
    u.canonical.push_back(s);
  }
  u.annotated = u.canonical;
  if (split == Split::kEval && spec.p_err > 0.0) {
    for (auto& s : u.annotated) {
      if (s.initial >= 0 && spec.n_initials > 1 && uniform(rng, 0.0, 1.0) < spec.p_err) {
        s.initial = other_than(rng, spec.n_initials, s.initial);
      }
      if (uniform(rng, 0.0, 1.0) < spec.p_err) {
        const bool tone_sub = spec.n_finals == 1 || uniform(rng, 0.0, 1.0) < 0.5;
        if (tone_sub) {
          s.tone = 1 + other_than(rng, kTones, s.tone - 1);
        } else {
          s.final_index = other_than(rng, spec.n_finals, s.final_index);
        }
      }
    }
  }
  u.speaker_scale = uniform(rng, spec.speaker_min, spec.speaker_max);
  u.audio = render(u.annotated, spec, u.speaker_scale, rng);
  return u;
}

inline std::vector<std::string> syllable_texts(const std::vector<Syllable>& s) {
  std::vector<std::string> out;
  for (const auto& x : s) out.push_back(x.text());
  return out;
}

struct DatagenResult {
  Manifest train, dev, eval;
};

// Writes wav/, {train,dev,eval}.jsonl, inventory.txt and synth_spec.json.
inline DatagenResult datagen(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "wav", ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + (out_dir / "wav").string() + ": " + ec.message());
  {
    std::ofstream inv(out_dir / "inventory.txt");
    inv << spec.inventory().to_text();
    std::ofstream js(out_dir / "synth_spec.json");
    js << to_json(spec).dump(2) << '\n';
    if (!inv || !js) fail(ErrorCode::kIo, "cannot write to " + out_dir.string());
  }
  DatagenResult result;
  const std::array<std::pair<Split, int>, 3> plan = {
      {{Split::kTrain, spec.n_train}, {Split::kDev, spec.n_dev}, {Split::kEval, spec.n_eval}}};
  for (const auto& [split, count] : plan) {
    Manifest& m = split == Split::kTrain ? result.train
                  : split == Split::kDev ? result.dev
                                         : result.eval;
    for (int i = 0; i < count; ++i) {
      auto u = synthesize(spec, split, i);
      const auto wav = out_dir / "wav" / (u.utt_id + ".wav");
      signal::write_wav(wav, u.audio);
      m.push_back({u.utt_id, wav, syllable_texts(u.canonical), syllable_texts(u.annotated)});
    }
    write_manifest(out_dir / (to_string(split) + ".jsonl"), m);
    spdlog::info("datagen: {} {} utterances", count, to_string(split));
  }
  return result;
}

}  // namespace tonemdd::pipeline

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

// Feature extraction shared by training and decoding: per-utterance
// normalized log-mel, DIO pitch and the model input for each pitch variant.

#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "tonemdd/autodiff/tensor.hpp"
#include "tonemdd/lexicon/vocabulary.hpp"
#include "tonemdd/model/config.hpp"
#include "tonemdd/model/transducer.hpp"
#include "tonemdd/pipeline/manifest.hpp"
#include "tonemdd/signal/dio.hpp"
#include "tonemdd/signal/melspec.hpp"
#include "tonemdd/signal/pitch.hpp"
#include "tonemdd/signal/waveform.hpp"

namespace tonemdd::pipeline {

// Keeps the first `ceps` DCT-II coefficients of each log-mel frame and
// transforms back, leaving the smooth spectral envelope without harmonic
// ripple.
inline void lifter_envelope(std::vector<double>& data, std::size_t frames, std::size_t bands,
                            std::size_t ceps) {
  std::vector<double> basis(ceps * bands);
  for (std::size_t k = 0; k < ceps; ++k) {
    const double norm = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(bands));
    for (std::size_t b = 0; b < bands; ++b) {
      basis[k * bands + b] =
          norm * std::cos(std::numbers::pi * static_cast<double>(k) * (b + 0.5) / bands);
    }
  }
  std::vector<double> c(ceps);
  for (std::size_t f = 0; f < frames; ++f) {
    double* row = data.data() + f * bands;
    for (std::size_t k = 0; k < ceps; ++k) {
      c[k] = 0.0;
      for (std::size_t b = 0; b < bands; ++b) c[k] += basis[k * bands + b] * row[b];
    }
    for (std::size_t b = 0; b < bands; ++b) {
      row[b] = 0.0;
      for (std::size_t k = 0; k < ceps; ++k) row[b] += basis[k * bands + b] * c[k];
    }
  }
}

// Log-mel [frames x n_mels], optionally liftered to its envelope, with
// per-utterance mean/variance normalization of every band.
inline ad::Tensor normalized_log_mel(const signal::Waveform& w, int n_mels, int envelope_ceps = 0,
                                     double f_min = 0.0) {
  signal::LogMelOptions opt;
  opt.n_mels = n_mels;
  opt.f_min = f_min;
  const auto lm = signal::log_mel(w, opt);
  const std::size_t frames = lm.frames, bands = static_cast<std::size_t>(n_mels);
  std::vector<double> data = lm.data;
  if (envelope_ceps > 0 && envelope_ceps < n_mels) {
    lifter_envelope(data, frames, bands, static_cast<std::size_t>(envelope_ceps));
  }
  for (std::size_t b = 0; b < bands; ++b) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t f = 0; f < frames; ++f) mean += data[f * bands + b];
    mean /= static_cast<double>(frames);
    for (std::size_t f = 0; f < frames; ++f) {
      const double d = data[f * bands + b] - mean;
      sq += d * d;
    }
    const double sd = std::sqrt(sq / static_cast<double>(frames) + 1e-8);
    for (std::size_t f = 0; f < frames; ++f) data[f * bands + b] = (data[f * bands + b] - mean) / sd;
  }
  return ad::Tensor({frames, bands}, std::move(data));
}

inline signal::PitchTrack extract_pitch(const signal::Waveform& w, const model::ModelConfig& cfg) {
  return signal::estimate_f0(w, cfg.pitch_hop_ms, cfg.f0_floor, cfg.f0_ceil);
}

// Acoustic and pitch analysis of one utterance, before quantization.
struct Analyzed {
  std::string utt_id;
  ad::Tensor log_mel;
  std::optional<signal::PitchTrack> pitch;  // only when the model uses pitch
  std::vector<int> labels;                  // annotated phoneme ids
  std::vector<std::string> canonical;       // phoneme symbols
  std::vector<std::string> annotated;
};

inline Analyzed analyze(const Utterance& u, const model::ModelConfig& cfg,
                        const lexicon::Vocabulary& vocab) {
  const auto w = signal::read_wav(u.audio);
  Analyzed a;
  a.utt_id = u.utt_id;
  a.log_mel = normalized_log_mel(w, cfg.n_mels, cfg.envelope_ceps, cfg.mel_fmin);
  if (cfg.uses_pitch()) a.pitch = extract_pitch(w, cfg);
  a.canonical = phoneme_symbols(u.canonical, vocab.inventory());
  a.annotated = phoneme_symbols(u.annotated, vocab.inventory());
  a.labels = vocab.encode_tokens(a.annotated);
  return a;
}

inline std::vector<Analyzed> analyze_all(const Manifest& m, const model::ModelConfig& cfg,
                                         const lexicon::Vocabulary& vocab) {
  std::vector<Analyzed> out;
  out.reserve(m.size());
  for (const auto& u : m) out.push_back(analyze(u, cfg, vocab));
  return out;
}

// Corpus statistics over the pitch tracks of `train`.
inline signal::CorpusPitchStats pitch_stats(const std::vector<Analyzed>& train,
                                            const model::ModelConfig& cfg) {
  std::vector<signal::PitchTrack> tracks;
  for (const auto& a : train) {
    if (a.pitch) tracks.push_back(*a.pitch);
  }
  return signal::corpus_pitch_stats(tracks, cfg.f0_floor, cfg.f0_ceil);
}

// Model input for the configured pitch variant. `stats` is required for
// the embedded variants (coarse uses its range).
inline model::ModelInput model_input(const Analyzed& a, const model::ModelConfig& cfg,
                                     const signal::CorpusPitchStats& stats) {
  model::ModelInput in;
  in.log_mel = a.log_mel;
  if (!cfg.uses_pitch()) return in;
  if (!a.pitch) fail(ErrorCode::kInvalidArgument, a.utt_id + ": missing pitch track");
  const auto& t = *a.pitch;
  if (cfg.pitch_variant == model::PitchInput::kRawNoEmbed) {
    in.pitch_values.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      in.pitch_values[i] = t.voiced[i] ? t.f0_hz[i] / cfg.f0_ceil : 0.0;
    }
  } else {
    in.pitch_ids = signal::quantize_track(t, model::quantizer_for(cfg.pitch_variant), stats).indices;
  }
  return in;
}

}  // namespace tonemdd::pipeline

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

// The pitch-aware stateless transducer: encoder (acoustic + pitch fusion),
// stateless decoder, joint network, loss and greedy decoding.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <spdlog/spdlog.h>

#include "tonemdd/lexicon/vocabulary.hpp"
#include "tonemdd/model/blocks.hpp"
#include "tonemdd/model/config.hpp"
#include "tonemdd/rnnt/greedy.hpp"
#include "tonemdd/rnnt/loss.hpp"

namespace tonemdd::model {

// Per-utterance network input.
struct ModelInput {
  Tensor log_mel;                    // [T10 x n_mels]
  std::vector<int> pitch_ids;        // quantized pitch, embedded variants
  std::vector<double> pitch_values;  // raw_no_embed: F0 / f0_ceil, 0 when unvoiced
};

class TransducerModel {
 public:
  TransducerModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg), store_(seed) {
    cfg_.validate();
    const auto d = [](int v) { return static_cast<std::size_t>(v); };
    frontend = AcousticFrontend::make(store_, d(cfg_.n_mels), d(cfg_.d_acoustic));
    frontend_params_ = store_.all().size();
    subsample = Subsampler::make(store_, d(cfg_.d_acoustic), d(cfg_.d_enc));
    if (cfg_.uses_pitch()) {
      if (cfg_.pitch_variant == PitchInput::kRawNoEmbed) {
        pitch_lift = Linear::make(store_, "pitch.lift", 1, d(cfg_.d_pitch_embed));
      } else {
        pitch_embed = Embedding::make(store_, "pitch.embed", d(cfg_.pitch_vocab()),
                                      d(cfg_.d_pitch_embed));
      }
      for (int m = 0; m < cfg_.num_pitch_encoders; ++m) {
        const std::string name = "pitch.unit" + std::to_string(m);
        PitchEncoderUnit unit;
        unit.conv = Conv1d::make(store_, name + ".conv", 3,
                                 d(m == 0 ? cfg_.d_pitch_embed : cfg_.fusion_dim),
                                 d(cfg_.fusion_dim), d(cfg_.conv_stride), 1);
        unit.norm = Affine::make(store_, name + ".gn", d(cfg_.fusion_dim));
        unit.groups = d(cfg_.norm_groups);
        if (cfg_.uses_pfb()) unit.pfb.push_back(make_pfb(name + ".pfb"));
        pitch_units.push_back(std::move(unit));
      }
      if (cfg_.uses_pfb()) {
        fuse_in = Linear::make(store_, "fuse.in", d(cfg_.d_enc), d(cfg_.fusion_dim));
        fuse_pfb.push_back(make_pfb("fuse.pfb"));
        fuse_out = Linear::make(store_, "fuse.out", d(cfg_.fusion_dim), d(cfg_.d_enc));
      } else {
        fuse_linear = Linear::make(store_, "fuse.linear", d(cfg_.d_enc + cfg_.fusion_dim),
                                   d(cfg_.d_enc));
      }
    }
    decoder = StatelessDecoder::make(store_, d(cfg_.vocab_size), d(cfg_.decoder_embed),
                                     d(cfg_.decoder_context), d(cfg_.d_joint));
    joint = JointNetwork::make(store_, d(cfg_.d_enc), d(cfg_.d_joint), d(cfg_.vocab_size));
  }

  TransducerModel(const TransducerModel&) = delete;
  TransducerModel& operator=(const TransducerModel&) = delete;
  TransducerModel(TransducerModel&&) = default;
  TransducerModel& operator=(TransducerModel&&) = default;

  const ModelConfig& config() const { return cfg_; }
  ad::NamedTensors& parameters() { return store_.all(); }
  const ad::NamedTensors& parameters() const { return store_.all(); }

  // True for the acoustic frontend's parameters (subject to freezing).
  std::vector<bool> frontend_mask() const {
    std::vector<bool> mask(store_.all().size(), false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(frontend_params_), true);
    return mask;
  }

  // Debug switch used to compare the full block against its global-only form.
  void set_local_branch(bool enabled) { use_local_ = enabled; }

  Tensor acoustic(const Tensor& log_mel) const { return subsample(frontend(log_mel)); }

  // Embedded pitch [T_pitch x d_pitch_embed].
  Tensor embed_pitch(const ModelInput& in) const {
    if (cfg_.pitch_variant == PitchInput::kRawNoEmbed) {
      if (in.pitch_values.empty()) fail(ErrorCode::kShapeMismatch, "missing pitch values");
      return pitch_lift(Tensor({in.pitch_values.size(), 1}, in.pitch_values));
    }
    if (in.pitch_ids.empty()) fail(ErrorCode::kShapeMismatch, "missing pitch indices");
    return pitch_embed(in.pitch_ids);
  }

  // Pitch path [frames x fusion_dim], aligned to the acoustic frame count.
  Tensor pitch_path(const ModelInput& in, std::size_t frames) const {
    Tensor h = embed_pitch(in);
    for (const auto& unit : pitch_units) h = unit(h, use_local_);
    const std::size_t len = h.dim(0);
    if (len == frames) return h;
    if (len == frames + 1) {
      spdlog::debug("pitch path {} frames, truncated to {}", len, frames);
      return ad::slice(h, 0, 0, frames);
    }
    if (len + 1 == frames) {
      spdlog::debug("pitch path {} frames, padded to {}", len, frames);
      return ad::concat({h, ad::slice(h, 0, len - 1, len)}, 0);
    }
    fail(ErrorCode::kMisalignment, "pitch/acoustic misalignment: pitch path has " +
                                       std::to_string(len) + " frames, acoustic path " +
                                       std::to_string(frames));
  }

  Tensor fuse(const Tensor& acoustic_out, const Tensor& pitch) const {
    if (!cfg_.uses_pitch()) return acoustic_out;
    if (pitch.dim(0) != acoustic_out.dim(0)) {
      fail(ErrorCode::kMisalignment, "fuse: length mismatch " +
                                         ad::shape_str(acoustic_out.shape()) + " vs " +
                                         ad::shape_str(pitch.shape()));
    }
    if (!cfg_.uses_pfb()) return fuse_linear(ad::concat({acoustic_out, pitch}, 1));
    return fuse_out(fuse_pfb[0](ad::add(fuse_in(acoustic_out), pitch), use_local_));
  }

  // Encoder output [T40 x d_enc].
  Tensor encode(const ModelInput& in) const {
    const Tensor a = acoustic(in.log_mel);
    if (!cfg_.uses_pitch()) return a;
    return fuse(a, pitch_path(in, a.dim(0)));
  }

  // Log-probability lattice [T*(U+1) x V] for labels y.
  Tensor lattice(const Tensor& enc, std::span<const int> y) const {
    const auto ids = decoder.prefix_contexts(y, lexicon::kBlankId);
    return joint(enc, decoder(ids));
  }

  Tensor loss(const ModelInput& in, std::span<const int> y) const {
    const Tensor enc = encode(in);
    return rnnt::transducer_loss(lattice(enc, y), enc.dim(0), y, lexicon::kBlankId);
  }

  std::vector<int> greedy_decode(
      const ModelInput& in,
      std::size_t max_symbols_per_frame = rnnt::kDefaultMaxSymbolsPerFrame) const {
    if (max_symbols_per_frame == 0) {
      fail(ErrorCode::kInvalidArgument, "max_symbols_per_frame must be >= 1");
    }
    ad::NoGradScope no_grad;
    const Tensor enc = joint.enc_proj(encode(in));
    const std::size_t dj = enc.dim(1);
    const std::size_t vocab = static_cast<std::size_t>(cfg_.vocab_size);
    const double* w = joint.out.weight.raw();
    const double* b = joint.out.bias.raw();
    std::map<std::vector<int>, std::vector<double>> dec_cache;
    std::vector<double> hidden(dj);
    auto logits = [&](std::size_t t, std::span<const int> ctx) {
      std::vector<int> key(ctx.begin(), ctx.end());
      auto it = dec_cache.find(key);
      if (it == dec_cache.end()) {
        const Tensor d = decoder(key);
        it = dec_cache.emplace(key, std::vector<double>(d.data().begin(), d.data().end())).first;
      }
      for (std::size_t j = 0; j < dj; ++j) hidden[j] = std::tanh(enc.at(t, j) + it->second[j]);
      std::vector<double> scores(b, b + vocab);
      for (std::size_t j = 0; j < dj; ++j) {
        const double h = hidden[j];
        const double* row = w + j * vocab;
        for (std::size_t v = 0; v < vocab; ++v) scores[v] += h * row[v];
      }
      return scores;
    };
    return rnnt::greedy_search(enc.dim(0), static_cast<std::size_t>(cfg_.decoder_context),
                               lexicon::kBlankId, max_symbols_per_frame, logits);
  }

  AcousticFrontend frontend;
  Subsampler subsample;
  Embedding pitch_embed;
  Linear pitch_lift;
  std::vector<PitchEncoderUnit> pitch_units;
  Linear fuse_in, fuse_out, fuse_linear;
  std::vector<PitchFusionBlock> fuse_pfb;
  StatelessDecoder decoder;
  JointNetwork joint;

 private:
  PitchFusionBlock make_pfb(const std::string& name) {
    return PitchFusionBlock::make(store_, name, static_cast<std::size_t>(cfg_.fusion_dim),
                                  static_cast<std::size_t>(cfg_.n_heads),
                                  static_cast<std::size_t>(cfg_.local_units),
                                  cfg_.fusion_mode == FusionMode::kPfb);
  }

  ModelConfig cfg_;
  ParameterStore store_;
  std::size_t frontend_params_ = 0;
  bool use_local_ = true;
};

}  // namespace tonemdd::model

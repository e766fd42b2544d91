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

// Hyperparameters of the pitch-aware stateless transducer.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tonemdd/common/error.hpp"
#include "tonemdd/signal/dio.hpp"
#include "tonemdd/signal/pitch.hpp"

namespace tonemdd::model {

enum class PitchInput { kNone, kRaw, kRawNoEmbed, kMel, kCoarse };
enum class FusionMode { kPfb, kPfbGlobalOnly, kLinear };

inline std::string to_string(PitchInput p) {
  switch (p) {
    case PitchInput::kNone: return "none";
    case PitchInput::kRaw: return "raw";
    case PitchInput::kRawNoEmbed: return "raw_no_embed";
    case PitchInput::kMel: return "mel";
    case PitchInput::kCoarse: return "coarse";
  }
  return "?";
}

inline std::string to_string(FusionMode m) {
  switch (m) {
    case FusionMode::kPfb: return "pfb";
    case FusionMode::kPfbGlobalOnly: return "pfb_global_only";
    case FusionMode::kLinear: return "linear";
  }
  return "?";
}

inline PitchInput pitch_input_from_string(const std::string& s) {
  for (auto p : {PitchInput::kNone, PitchInput::kRaw, PitchInput::kRawNoEmbed, PitchInput::kMel,
                 PitchInput::kCoarse}) {
    if (to_string(p) == s) return p;
  }
  fail(ErrorCode::kConfig, "pitch_variant: unknown value '" + s + "'");
}

inline FusionMode fusion_mode_from_string(const std::string& s) {
  for (auto m : {FusionMode::kPfb, FusionMode::kPfbGlobalOnly, FusionMode::kLinear}) {
    if (to_string(m) == s) return m;
  }
  fail(ErrorCode::kConfig, "fusion_mode: unknown value '" + s + "'");
}

// Embedding-table variant for an embedded pitch input.
inline signal::PitchVariant quantizer_for(PitchInput p) {
  switch (p) {
    case PitchInput::kMel: return signal::PitchVariant::kMel;
    case PitchInput::kCoarse: return signal::PitchVariant::kCoarse;
    default: return signal::PitchVariant::kRaw;
  }
}

struct ModelConfig {
  int n_mels = 40;
  int envelope_ceps = 0;  // >0: keep only this many cepstral terms of the log-mel
  double mel_fmin = 0.0;  // lowest mel filter edge in Hz
  int d_acoustic = 128;
  int d_enc = 256;
  int d_joint = 128;
  int d_pitch_embed = 64;
  int n_heads = 4;
  int fusion_dim = 256;
  int pitch_hop_ms = 40;
  int num_pitch_encoders = 1;  // M
  int conv_stride = 1;
  int norm_groups = 8;
  int local_units = 2;
  int decoder_context = 2;
  int decoder_embed = 64;
  int vocab_size = 215;
  PitchInput pitch_variant = PitchInput::kRaw;
  FusionMode fusion_mode = FusionMode::kPfb;
  double f0_floor = signal::kDefaultF0Floor;
  double f0_ceil = signal::kDefaultF0Ceil;

  bool uses_pitch() const { return pitch_variant != PitchInput::kNone; }
  bool uses_pfb() const { return fusion_mode != FusionMode::kLinear; }

  int pitch_vocab() const {
    if (pitch_variant == PitchInput::kNone || pitch_variant == PitchInput::kRawNoEmbed) return 0;
    return signal::pitch_vocab_size(quantizer_for(pitch_variant), f0_ceil);
  }

  void validate() const {
    auto positive = [](const char* name, int v) {
      if (v <= 0) fail(ErrorCode::kConfig, std::string(name) + ": must be positive");
    };
    positive("n_mels", n_mels);
    positive("d_acoustic", d_acoustic);
    positive("d_enc", d_enc);
    positive("d_joint", d_joint);
    positive("d_pitch_embed", d_pitch_embed);
    positive("n_heads", n_heads);
    positive("fusion_dim", fusion_dim);
    positive("norm_groups", norm_groups);
    positive("decoder_context", decoder_context);
    positive("decoder_embed", decoder_embed);
    if (envelope_ceps < 0 || envelope_ceps > n_mels) {
      fail(ErrorCode::kConfig, "envelope_ceps: must be in [0, n_mels]");
    }
    if (!(mel_fmin >= 0.0 && mel_fmin < 4000.0)) {
      fail(ErrorCode::kConfig, "mel_fmin: must be in [0, 4000) Hz");
    }
    if (local_units < 0) fail(ErrorCode::kConfig, "local_units: must be non-negative");
    const bool hop_ok = (pitch_hop_ms == 10 && num_pitch_encoders == 2 && conv_stride == 2) ||
                        (pitch_hop_ms == 20 && num_pitch_encoders == 1 && conv_stride == 2) ||
                        (pitch_hop_ms == 40 && num_pitch_encoders == 1 && conv_stride == 1);
    if (!hop_ok) {
      fail(ErrorCode::kConfig, "pitch_hop_ms/num_pitch_encoders/conv_stride: (" +
                                   std::to_string(pitch_hop_ms) + ", " +
                                   std::to_string(num_pitch_encoders) + ", " +
                                   std::to_string(conv_stride) +
                                   ") not one of (10,2,2), (20,1,2), (40,1,1)");
    }
    if (fusion_dim % n_heads != 0) {
      fail(ErrorCode::kConfig, "fusion_dim: " + std::to_string(fusion_dim) +
                                   " not divisible by n_heads " + std::to_string(n_heads));
    }
    if (fusion_dim % norm_groups != 0) {
      fail(ErrorCode::kConfig, "norm_groups: must divide fusion_dim");
    }
    if (vocab_size < 2) fail(ErrorCode::kConfig, "vocab_size: must be at least 2");
    if (!(f0_floor > 0.0 && f0_floor < f0_ceil)) {
      fail(ErrorCode::kConfig, "f0_floor/f0_ceil: need 0 < f0_floor < f0_ceil");
    }
  }
};

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"n_mels", c.n_mels},
          {"envelope_ceps", c.envelope_ceps},
          {"mel_fmin", c.mel_fmin},
          {"d_acoustic", c.d_acoustic},
          {"d_enc", c.d_enc},
          {"d_joint", c.d_joint},
          {"d_pitch_embed", c.d_pitch_embed},
          {"n_heads", c.n_heads},
          {"fusion_dim", c.fusion_dim},
          {"pitch_hop_ms", c.pitch_hop_ms},
          {"num_pitch_encoders", c.num_pitch_encoders},
          {"conv_stride", c.conv_stride},
          {"norm_groups", c.norm_groups},
          {"local_units", c.local_units},
          {"decoder_context", c.decoder_context},
          {"decoder_embed", c.decoder_embed},
          {"vocab_size", c.vocab_size},
          {"pitch_variant", to_string(c.pitch_variant)},
          {"fusion_mode", to_string(c.fusion_mode)},
          {"f0_floor", c.f0_floor},
          {"f0_ceil", c.f0_ceil}};
}

// Missing keys keep their defaults; unknown keys are rejected.
inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::kConfig, "model config must be a JSON object");
  ModelConfig c;
  const auto known = to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) fail(ErrorCode::kConfig, key + ": unknown model config field");
    try {
      if (key == "pitch_variant") {
        c.pitch_variant = pitch_input_from_string(value.get<std::string>());
      } else if (key == "fusion_mode") {
        c.fusion_mode = fusion_mode_from_string(value.get<std::string>());
      } else if (key == "mel_fmin") {
        c.mel_fmin = value.get<double>();
      } else if (key == "f0_floor") {
        c.f0_floor = value.get<double>();
      } else if (key == "f0_ceil") {
        c.f0_ceil = value.get<double>();
      } else {
        if (!value.is_number_integer()) fail(ErrorCode::kConfig, key + ": expected an integer");
        const int v = value.get<int>();
        if (key == "n_mels") c.n_mels = v;
        else if (key == "envelope_ceps") c.envelope_ceps = v;
        else if (key == "d_acoustic") c.d_acoustic = v;
        else if (key == "d_enc") c.d_enc = v;
        else if (key == "d_joint") c.d_joint = v;
        else if (key == "d_pitch_embed") c.d_pitch_embed = v;
        else if (key == "n_heads") c.n_heads = v;
        else if (key == "fusion_dim") c.fusion_dim = v;
        else if (key == "pitch_hop_ms") c.pitch_hop_ms = v;
        else if (key == "num_pitch_encoders") c.num_pitch_encoders = v;
        else if (key == "conv_stride") c.conv_stride = v;
        else if (key == "norm_groups") c.norm_groups = v;
        else if (key == "local_units") c.local_units = v;
        else if (key == "decoder_context") c.decoder_context = v;
        else if (key == "decoder_embed") c.decoder_embed = v;
        else if (key == "vocab_size") c.vocab_size = v;
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kConfig, key + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

// Name of the first field where the two configs differ, or "" if equal.
inline std::string first_divergent_field(const ModelConfig& a, const ModelConfig& b) {
  const auto ja = to_json(a), jb = to_json(b);
  for (const auto& [key, value] : ja.items()) {
    if (jb.at(key) != value) return key;
  }
  return "";
}

}  // namespace tonemdd::model

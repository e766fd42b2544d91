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

// Trained-model directories: checkpoint tensors plus model_config.json,
// inventory.txt and (for pitch models) pitch_stats.json.

#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "tonemdd/autodiff/checkpoint.hpp"
#include "tonemdd/lexicon/phoneme.hpp"
#include "tonemdd/model/config.hpp"
#include "tonemdd/model/transducer.hpp"
#include "tonemdd/signal/pitch.hpp"

namespace tonemdd::pipeline {

inline constexpr const char* kModelConfigFile = "model_config.json";
inline constexpr const char* kInventoryFile = "inventory.txt";
inline constexpr const char* kPitchStatsFile = "pitch_stats.json";

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::kIo, "short write to " + path.string());
}

inline void save_model(const std::filesystem::path& dir, const model::TransducerModel& m,
                       const lexicon::Inventory& inv,
                       const std::optional<signal::CorpusPitchStats>& stats) {
  ad::save_checkpoint(dir, m.parameters());
  write_json_file(dir / kModelConfigFile, model::to_json(m.config()));
  std::ofstream out(dir / kInventoryFile);
  out << inv.to_text();
  if (!out) fail(ErrorCode::kIo, "cannot write " + (dir / kInventoryFile).string());
  if (stats) write_json_file(dir / kPitchStatsFile, signal::to_json(*stats));
}

struct LoadedModel {
  model::TransducerModel model;
  lexicon::Inventory inventory;
  signal::CorpusPitchStats stats;
};

// Loads a model directory. When `expected` is given, a differing stored
// config is rejected with the name of the first divergent field.
inline LoadedModel load_model(const std::filesystem::path& dir,
                              const std::optional<model::ModelConfig>& expected = {}) {
  const auto cfg = model::model_config_from_json(read_json_file(dir / kModelConfigFile));
  if (expected) {
    const auto field = model::first_divergent_field(cfg, *expected);
    if (!field.empty()) {
      fail(ErrorCode::kConfig, "config/checkpoint mismatch in field '" + field + "'");
    }
  }
  auto inv = lexicon::Inventory::load(dir / kInventoryFile);
  if (static_cast<int>(inv.size()) + 1 != cfg.vocab_size) {
    fail(ErrorCode::kConfig, "vocab_size: config says " + std::to_string(cfg.vocab_size) +
                                 ", inventory has " + std::to_string(inv.size() + 1) +
                                 " tokens with blank");
  }
  LoadedModel out{model::TransducerModel(cfg, 0), std::move(inv), {}};
  ad::restore_checkpoint(dir, out.model.parameters());
  if (cfg.uses_pitch() && cfg.pitch_variant != model::PitchInput::kRawNoEmbed) {
    out.stats = signal::corpus_pitch_stats_from_json(read_json_file(dir / kPitchStatsFile));
  }
  return out;
}

}  // namespace tonemdd::pipeline

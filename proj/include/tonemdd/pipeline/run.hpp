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

// End-to-end pipeline glue: the combined configuration with --key=value
// overrides, training from manifests, decoding and evaluation.

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "tonemdd/common/json_fields.hpp"
#include "tonemdd/eval/corpus.hpp"
#include "tonemdd/lexicon/vocabulary.hpp"
#include "tonemdd/model/config.hpp"
#include "tonemdd/pipeline/features.hpp"
#include "tonemdd/pipeline/gradcheck.hpp"
#include "tonemdd/pipeline/manifest.hpp"
#include "tonemdd/pipeline/model_io.hpp"
#include "tonemdd/pipeline/synth.hpp"
#include "tonemdd/pipeline/train.hpp"

namespace tonemdd::pipeline {

// Model defaults for the synthetic corpus: toy dimensions, 40 ms pitch hop,
// an F0-blind acoustic path (liftered log-mel above 300 Hz) and the
// vocabulary of the synthetic inventory.
inline model::ModelConfig toy_model_config(const SynthSpec& synth) {
  model::ModelConfig m;
  m.envelope_ceps = 12;
  m.mel_fmin = 300.0;
  m.vocab_size = static_cast<int>(synth.inventory().size()) + 1;
  return m;
}

struct PipelineConfig {
  SynthSpec synth;
  model::ModelConfig model = toy_model_config(SynthSpec{});
  TrainConfig train;
  GradCheckOptions gradcheck{1e-4, 1e-4, 4, 7};
};

inline nlohmann::json to_json(const GradCheckOptions& g) {
  return {{"eps", g.eps}, {"tol", g.tol}, {"max_coords", g.max_coords}, {"seed", g.seed}};
}

inline nlohmann::json to_json(const PipelineConfig& c) {
  return {{"synth", to_json(c.synth)},
          {"model", model::to_json(c.model)},
          {"train", to_json(c.train)},
          {"gradcheck", to_json(c.gradcheck)}};
}

// Sections and fields are optional; unknown ones are rejected. Without an
// explicit model.vocab_size the synthetic inventory decides it.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  reject_unknown_keys(j, to_json(c), "config");
  if (j.contains("synth")) c.synth = synth_spec_from_json(j.at("synth"));
  nlohmann::json m = j.contains("model") ? j.at("model") : nlohmann::json::object();
  if (!m.is_object()) fail(ErrorCode::kConfig, "model: expected a JSON object");
  if (!m.contains("vocab_size")) m["vocab_size"] = toy_model_config(c.synth).vocab_size;
  c.model = model::model_config_from_json(m);
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  if (j.contains("gradcheck")) {
    const auto& g = j.at("gradcheck");
    reject_unknown_keys(g, to_json(c.gradcheck), "gradcheck");
    read_field(g, "eps", c.gradcheck.eps, "gradcheck");
    read_field(g, "tol", c.gradcheck.tol, "gradcheck");
    read_field(g, "max_coords", c.gradcheck.max_coords, "gradcheck");
    read_field(g, "seed", c.gradcheck.seed, "gradcheck");
    if (!(c.gradcheck.eps > 0.0 && c.gradcheck.tol > 0.0)) {
      fail(ErrorCode::kConfig, "gradcheck.eps/tol: must be positive");
    }
  }
  return c;
}

// Applies `key=value` with a dotted key ("train.lr=0.01"). The key must name
// an existing field; the value is read as JSON, falling back to a string.
inline void apply_override(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    fail(ErrorCode::kConfig, "override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  const nlohmann::json defaults = to_json(PipelineConfig{});
  const nlohmann::json* schema = &defaults;
  nlohmann::json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (!schema->is_object() || !schema->contains(part)) {
      fail(ErrorCode::kConfig, key + ": unknown config key");
    }
    schema = &schema->at(part);
    if (!node->is_object()) *node = nlohmann::json::object();
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (schema->is_object()) fail(ErrorCode::kConfig, key + ": names a section, not a field");
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  *node = value;
}

inline PipelineConfig load_pipeline_config(const std::optional<std::filesystem::path>& path,
                                           const std::vector<std::string>& overrides) {
  nlohmann::json j = path ? read_json_file(*path) : nlohmann::json::object();
  if (!j.is_object()) fail(ErrorCode::kConfig, "config: expected a JSON object");
  for (const auto& o : overrides) apply_override(j, o);
  return pipeline_config_from_json(j);
}

inline lexicon::Inventory inventory_beside(const std::filesystem::path& manifest) {
  return lexicon::Inventory::load(manifest.parent_path() / kInventoryFile);
}

inline std::vector<TrainItem> make_items(const std::vector<Analyzed>& analyzed,
                                         const model::ModelConfig& cfg,
                                         const signal::CorpusPitchStats& stats) {
  std::vector<TrainItem> out;
  out.reserve(analyzed.size());
  for (const auto& a : analyzed) out.push_back({a.utt_id, model_input(a, cfg, stats), a.labels});
  return out;
}

inline bool needs_pitch_stats(const model::ModelConfig& cfg) {
  return cfg.uses_pitch() && cfg.pitch_variant != model::PitchInput::kRawNoEmbed;
}

struct TrainedModel {
  model::TransducerModel model;
  std::optional<signal::CorpusPitchStats> stats;
  TrainResult result;
};

// Trains on `train`, selecting on `dev`. With `out_dir` the best model is
// saved to out_dir/best together with its config, inventory and statistics.
inline TrainedModel train_model(const model::ModelConfig& mcfg, const TrainConfig& tcfg,
                                const Manifest& train, const Manifest& dev,
                                const lexicon::Inventory& inv,
                                const std::optional<std::filesystem::path>& out_dir = {},
                                const EpochCallback& on_epoch = {}) {
  mcfg.validate();
  tcfg.validate();
  if (train.empty()) fail(ErrorCode::kEmptyCorpus, "empty training manifest");
  if (dev.empty()) fail(ErrorCode::kEmptyCorpus, "empty dev manifest");
  if (static_cast<int>(inv.size()) + 1 != mcfg.vocab_size) {
    fail(ErrorCode::kConfig, "vocab_size: config says " + std::to_string(mcfg.vocab_size) +
                                 " but the inventory gives " + std::to_string(inv.size() + 1));
  }
  for (const auto& u : train) {
    if (u.canonical != u.annotated) {
      fail(ErrorCode::kInvalidArgument,
           u.utt_id + ": training records need annotated == canonical");
    }
  }
  const lexicon::Vocabulary vocab(inv);
  const auto train_a = analyze_all(train, mcfg, vocab);
  const auto dev_a = analyze_all(dev, mcfg, vocab);
  std::optional<signal::CorpusPitchStats> stats;
  signal::CorpusPitchStats s;
  s.f0_floor = mcfg.f0_floor;
  s.f0_ceil = mcfg.f0_ceil;
  if (needs_pitch_stats(mcfg)) {
    s = pitch_stats(train_a, mcfg);
    stats = s;
  }
  const auto train_items = make_items(train_a, mcfg, s);
  const auto dev_items = make_items(dev_a, mcfg, s);
  TrainedModel out{model::TransducerModel(mcfg, tcfg.seed), stats, {}};
  Trainer trainer(out.model, tcfg);
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    write_json_file(*out_dir / "train_config.json", to_json(tcfg));
  }
  out.result = trainer.fit(train_items, dev_items, out_dir, &inv, stats, on_epoch);
  return out;
}

struct Prediction {
  std::string utt_id;
  std::vector<std::string> phonemes;
};

inline std::vector<Prediction> decode_manifest(const model::TransducerModel& m,
                                               const lexicon::Inventory& inv,
                                               const signal::CorpusPitchStats& stats,
                                               const Manifest& manifest,
                                               std::size_t max_symbols_per_frame) {
  const lexicon::Vocabulary vocab(inv);
  if (vocab.size() != m.config().vocab_size) {
    fail(ErrorCode::kConfig, "vocab_size: model has " + std::to_string(m.config().vocab_size) +
                                 ", inventory gives " + std::to_string(vocab.size()));
  }
  std::vector<Prediction> out;
  for (const auto& u : manifest) {
    const auto a = analyze(u, m.config(), vocab);
    const auto ids = m.greedy_decode(model_input(a, m.config(), stats), max_symbols_per_frame);
    out.push_back({u.utt_id, vocab.symbols(ids)});
  }
  return out;
}

inline void write_predictions(const std::filesystem::path& path,
                              const std::vector<Prediction>& preds) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& p : preds) {
    out << nlohmann::json{{"utt_id", p.utt_id}, {"phonemes", p.phonemes}}.dump() << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "short write to " + path.string());
}

inline std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("utt_id").get<std::string>(),
                     j.at("phonemes").get<std::vector<std::string>>()});
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// Joins manifest transcripts (as phonemes) with predictions by utt_id, in
// manifest order.
inline std::vector<eval::EvalRecord> join_for_eval(const Manifest& manifest,
                                                   const std::vector<Prediction>& preds,
                                                   const lexicon::Inventory& inv) {
  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : preds) {
    if (!by_id.emplace(p.utt_id, &p).second) {
      fail(ErrorCode::kInvalidArgument, "duplicate prediction for " + p.utt_id);
    }
  }
  std::vector<eval::EvalRecord> out;
  for (const auto& u : manifest) {
    auto it = by_id.find(u.utt_id);
    if (it == by_id.end()) fail(ErrorCode::kInvalidArgument, "no prediction for " + u.utt_id);
    out.push_back({u.utt_id, phoneme_symbols(u.canonical, inv), phoneme_symbols(u.annotated, inv),
                   it->second->phonemes});
    by_id.erase(it);
  }
  if (!by_id.empty()) {
    fail(ErrorCode::kInvalidArgument, "prediction for unknown utterance " + by_id.begin()->first);
  }
  return out;
}

inline void write_eval_manifest(const std::filesystem::path& path,
                                const std::vector<eval::EvalRecord>& records) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& r : records) out << eval::to_json(r).dump() << '\n';
  if (!out) fail(ErrorCode::kIo, "short write to " + path.string());
}

}  // namespace tonemdd::pipeline

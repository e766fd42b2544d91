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

// Mini-batch transducer training with Adam, global-norm clipping, optional
// frontend freezing, early stopping on dev loss and best-checkpoint saving.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "tonemdd/autodiff/adam.hpp"
#include "tonemdd/autodiff/tensor.hpp"
#include "tonemdd/common/json_fields.hpp"
#include "tonemdd/eval/align.hpp"
#include "tonemdd/model/transducer.hpp"
#include "tonemdd/pipeline/model_io.hpp"

namespace tonemdd::pipeline {

struct TrainConfig {
  double lr = 1e-3;
  int batch_size = 8;
  int max_epochs = 100;
  int patience = 10;             // epochs without dev-loss improvement; 0 disables
  double grad_clip = 5.0;        // global L2 norm; 0 disables
  int freeze_frontend_steps = 0;
  std::uint64_t seed = 1;        // model init and shuffling
  int max_symbols_per_frame = 10;

  void validate() const {
    if (!(lr > 0.0)) fail(ErrorCode::kConfig, "train.lr: must be positive");
    if (batch_size < 1) fail(ErrorCode::kConfig, "train.batch_size: must be >= 1");
    if (max_epochs < 1) fail(ErrorCode::kConfig, "train.max_epochs: must be >= 1");
    if (patience < 0) fail(ErrorCode::kConfig, "train.patience: must be >= 0");
    if (grad_clip < 0.0) fail(ErrorCode::kConfig, "train.grad_clip: must be >= 0");
    if (freeze_frontend_steps < 0) {
      fail(ErrorCode::kConfig, "train.freeze_frontend_steps: must be >= 0");
    }
    if (max_symbols_per_frame < 1) {
      fail(ErrorCode::kConfig, "train.max_symbols_per_frame: must be >= 1");
    }
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"grad_clip", c.grad_clip},
          {"freeze_frontend_steps", c.freeze_frontend_steps},
          {"seed", c.seed},
          {"max_symbols_per_frame", c.max_symbols_per_frame}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  reject_unknown_keys(j, to_json(c), "train");
  read_field(j, "lr", c.lr, "train");
  read_field(j, "batch_size", c.batch_size, "train");
  read_field(j, "max_epochs", c.max_epochs, "train");
  read_field(j, "patience", c.patience, "train");
  read_field(j, "grad_clip", c.grad_clip, "train");
  read_field(j, "freeze_frontend_steps", c.freeze_frontend_steps, "train");
  read_field(j, "seed", c.seed, "train");
  read_field(j, "max_symbols_per_frame", c.max_symbols_per_frame, "train");
  c.validate();
  return c;
}

struct TrainItem {
  std::string utt_id;
  model::ModelInput input;
  std::vector<int> labels;
};

struct EpochStats {
  int epoch = 0;
  std::int64_t steps = 0;
  double train_loss = 0.0;  // mean per utterance
  double dev_loss = 0.0;
  double dev_per = 0.0;     // greedy, against annotated
  bool improved = false;
  double seconds = 0.0;
};

inline nlohmann::json to_json(const EpochStats& s) {
  return {{"epoch", s.epoch},         {"steps", s.steps},     {"train_loss", s.train_loss},
          {"dev_loss", s.dev_loss},   {"dev_per", s.dev_per}, {"improved", s.improved},
          {"seconds", s.seconds}};
}

struct TrainResult {
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_dev_loss = 0.0;
  std::int64_t steps = 0;
};

// Returning false from the callback stops training after that epoch.
using EpochCallback = std::function<bool(const EpochStats&)>;

struct DevScore {
  double loss = 0.0;
  double per = 0.0;
};

inline DevScore score_items(const model::TransducerModel& m, const std::vector<TrainItem>& items,
                            std::size_t max_symbols) {
  ad::NoGradScope no_grad;
  DevScore s;
  std::size_t edits = 0, ref = 0;
  for (const auto& it : items) {
    s.loss += m.loss(it.input, it.labels).item();
    edits += eval::align(it.labels, m.greedy_decode(it.input, max_symbols)).cost;
    ref += it.labels.size();
  }
  s.loss /= static_cast<double>(std::max<std::size_t>(items.size(), 1));
  s.per = ref ? static_cast<double>(edits) / static_cast<double>(ref) : 0.0;
  return s;
}

class Trainer {
 public:
  Trainer(model::TransducerModel& model, TrainConfig cfg)
      : model_(model), cfg_(std::move(cfg)), rng_(cfg_.seed) {
    cfg_.validate();
    for (auto& [name, t] : model_.parameters()) params_.push_back(t);
    frontend_ = model_.frontend_mask();
    opt_.lr = cfg_.lr;
  }

  std::int64_t steps() const { return steps_; }

  // Where divergence diagnostics are written; empty keeps them in memory.
  void set_dump_dir(std::filesystem::path dir) { dump_dir_ = std::move(dir); }

  // One optimizer update on the mean loss of `batch`; returns that mean.
  double step(const std::vector<const TrainItem*>& batch) {
    if (batch.empty()) fail(ErrorCode::kInvalidArgument, "empty batch");
    for (auto& p : params_) p.zero_grad();
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    std::vector<double> losses;
    for (const TrainItem* it : batch) {
      ad::Tape tape;
      ad::Tensor loss;
      {
        ad::TapeScope scope(tape);
        loss = model_.loss(it->input, it->labels);
      }
      losses.push_back(loss.item());
      if (!std::isfinite(losses.back())) diverged(batch, losses, "non-finite loss");
      tape.backward(loss, inv_b);
    }
    double norm_sq = 0.0;
    for (const auto& p : params_) {
      if (!p.has_grad()) continue;
      for (double g : p.grad()) norm_sq += g * g;
    }
    if (!std::isfinite(norm_sq)) diverged(batch, losses, "non-finite gradient");
    const double norm = std::sqrt(norm_sq);
    if (cfg_.grad_clip > 0.0 && norm > cfg_.grad_clip) {
      const double s = cfg_.grad_clip / norm;
      for (auto& p : params_) {
        if (!p.has_grad()) continue;
        for (double& g : p.mutable_grad()) g *= s;
      }
    }
    const bool freeze = steps_ < cfg_.freeze_frontend_steps;
    ad::adam_step(params_, adam_, opt_, freeze ? frontend_ : std::vector<bool>{});
    ++steps_;
    return std::accumulate(losses.begin(), losses.end(), 0.0) * inv_b;
  }

  // Trains until max_epochs, early stop or the callback says stop. The best
  // dev-loss parameters are restored into the model at the end; when
  // `out_dir` is set they are also saved to out_dir/best and every epoch is
  // appended to out_dir/train_log.jsonl.
  TrainResult fit(const std::vector<TrainItem>& train, const std::vector<TrainItem>& dev,
                  const std::optional<std::filesystem::path>& out_dir = {},
                  const lexicon::Inventory* inventory = nullptr,
                  const std::optional<signal::CorpusPitchStats>& stats = {},
                  const EpochCallback& on_epoch = {}) {
    if (train.empty()) fail(ErrorCode::kEmptyCorpus, "empty training manifest");
    if (dev.empty()) fail(ErrorCode::kEmptyCorpus, "empty dev manifest");
    if (out_dir) {
      std::filesystem::create_directories(*out_dir);
      if (dump_dir_.empty()) dump_dir_ = *out_dir;
      std::ofstream(*out_dir / "train_log.jsonl", std::ios::trunc);
    }
    TrainResult result;
    std::vector<std::vector<double>> best = snapshot();
    double best_loss = std::numeric_limits<double>::infinity();
    int since_best = 0;
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto bs = static_cast<std::size_t>(cfg_.batch_size);
    for (int epoch = 1; epoch <= cfg_.max_epochs; ++epoch) {
      const auto t0 = std::chrono::steady_clock::now();
      std::shuffle(order.begin(), order.end(), rng_);
      double total = 0.0;
      for (std::size_t b = 0; b < order.size(); b += bs) {
        std::vector<const TrainItem*> batch;
        for (std::size_t i = b; i < std::min(order.size(), b + bs); ++i) {
          batch.push_back(&train[order[i]]);
        }
        total += step(batch) * static_cast<double>(batch.size());
      }
      EpochStats st;
      st.epoch = epoch;
      st.steps = steps_;
      st.train_loss = total / static_cast<double>(train.size());
      const auto dev_score =
          score_items(model_, dev, static_cast<std::size_t>(cfg_.max_symbols_per_frame));
      st.dev_loss = dev_score.loss;
      st.dev_per = dev_score.per;
      st.improved = st.dev_loss < best_loss;
      if (st.improved) {
        best_loss = st.dev_loss;
        best = snapshot();
        result.best_epoch = epoch;
        since_best = 0;
        if (out_dir && inventory) save_model(*out_dir / "best", model_, *inventory, stats);
      } else {
        ++since_best;
      }
      st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      spdlog::info("epoch {} steps {} train_loss {:.4f} dev_loss {:.4f} dev_per {:.4f}{} ({:.1f}s)",
                   epoch, steps_, st.train_loss, st.dev_loss, st.dev_per,
                   st.improved ? " *" : "", st.seconds);
      if (out_dir) {
        std::ofstream log(*out_dir / "train_log.jsonl", std::ios::app);
        log << to_json(st).dump() << '\n';
      }
      result.history.push_back(st);
      if (on_epoch && !on_epoch(st)) break;
      if (cfg_.patience > 0 && since_best >= cfg_.patience) {
        spdlog::info("early stop: no dev-loss improvement for {} epochs", cfg_.patience);
        break;
      }
    }
    restore(best);
    result.best_dev_loss = best_loss;
    result.steps = steps_;
    return result;
  }

 private:
  std::vector<std::vector<double>> snapshot() const {
    std::vector<std::vector<double>> out;
    for (const auto& p : params_) out.emplace_back(p.data().begin(), p.data().end());
    return out;
  }

  void restore(const std::vector<std::vector<double>>& values) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      std::copy(values[i].begin(), values[i].end(), params_[i].mutable_data().begin());
    }
  }

  [[noreturn]] void diverged(const std::vector<const TrainItem*>& batch,
                             const std::vector<double>& losses, const std::string& what) {
    nlohmann::json dump = {{"reason", what}, {"step", steps_}};
    nlohmann::json items = nlohmann::json::array();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      nlohmann::json item = {{"utt_id", batch[i]->utt_id},
                             {"labels", batch[i]->labels},
                             {"frames", batch[i]->input.log_mel.dim(0)}};
      if (i < losses.size()) {
        item["loss"] = std::isfinite(losses[i]) ? nlohmann::json(losses[i])
                                                : nlohmann::json(std::to_string(losses[i]));
      }
      items.push_back(item);
    }
    dump["batch"] = items;
    std::string where;
    if (!dump_dir_.empty()) {
      std::filesystem::create_directories(dump_dir_);
      write_json_file(dump_dir_ / "divergence.json", dump);
      where = "; batch dumped to " + (dump_dir_ / "divergence.json").string();
    }
    fail(ErrorCode::kDivergence,
         "training diverged at step " + std::to_string(steps_) + " (" + what + ")" + where);
  }

  model::TransducerModel& model_;
  TrainConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<ad::Tensor> params_;
  std::vector<bool> frontend_;
  ad::AdamOptions opt_;
  ad::AdamState adam_;
  std::int64_t steps_ = 0;
  std::filesystem::path dump_dir_;
};

}  // namespace tonemdd::pipeline

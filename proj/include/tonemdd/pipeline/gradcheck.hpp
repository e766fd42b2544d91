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

// Finite-difference gradient checks over every autodiff primitive and every
// model block, reported per check.

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "tonemdd/autodiff/grad_check.hpp"
#include "tonemdd/autodiff/ops.hpp"
#include "tonemdd/model/transducer.hpp"
#include "tonemdd/rnnt/loss.hpp"
#include "tonemdd/signal/dio.hpp"

namespace tonemdd::pipeline {

struct GradCheckOptions {
  double eps = 1e-4;
  double tol = 1e-4;
  std::size_t max_coords = 0;  // per tensor; 0 checks every coordinate
  std::uint64_t seed = 7;
};

struct NamedGradCheck {
  std::string name;
  ad::GradCheckReport report;
};

namespace gc_detail {

inline ad::Tensor random(ad::Shape shape, std::uint64_t seed, double scale = 1.0,
                         bool grad = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(ad::numel_of(shape));
  for (auto& x : v) x = n(rng);
  return ad::Tensor(std::move(shape), std::move(v), grad);
}

// Scalar <y, R> with a fixed random R.
inline ad::Tensor probe(const ad::Tensor& y, std::uint64_t seed) {
  return ad::sum(ad::mul(y, random(y.shape(), seed, 1.0, false)));
}

class Suite {
 public:
  explicit Suite(const GradCheckOptions& o) : o_(o) {}

  void run(const std::string& name, const std::function<ad::Tensor()>& f,
           std::vector<ad::Tensor> inputs) {
    out.push_back({name, ad::grad_check(f, std::move(inputs), o_.eps, o_.tol, o_.max_coords,
                                        o_.seed + out.size())});
  }

  std::vector<NamedGradCheck> out;

 private:
  GradCheckOptions o_;
};

inline std::vector<ad::Tensor> params_of(model::TransducerModel& m, const std::string& prefix) {
  std::vector<ad::Tensor> out;
  for (auto& [name, t] : m.parameters()) {
    if (name.rfind(prefix, 0) == 0) out.push_back(t);
  }
  return out;
}

inline std::vector<ad::Tensor> with(std::vector<ad::Tensor> a, std::vector<ad::Tensor> b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace gc_detail

inline std::vector<NamedGradCheck> gradcheck_primitives(const GradCheckOptions& o = {}) {
  using gc_detail::probe;
  using gc_detail::random;
  gc_detail::Suite s(o);
  const std::uint64_t k = o.seed * 1000;
  auto a = random({3, 4}, k + 1), b = random({4, 5}, k + 2), c = random({5, 4}, k + 3);
  auto d = random({3, 4}, k + 4), r = random({4}, k + 5), e = random({2, 4}, k + 6);
  auto f = random({3, 2}, k + 7);
  s.run("matmul", [&] { return probe(ad::matmul(a, b), k); }, {a, b});
  s.run("matmul_nt", [&] { return probe(ad::matmul_nt(a, c), k); }, {a, c});
  s.run("add", [&] { return probe(ad::add(a, d), k); }, {a, d});
  s.run("add_broadcast", [&] { return probe(ad::add(a, r), k); }, {a, r});
  s.run("mul", [&] { return probe(ad::mul(a, d), k); }, {a, d});
  s.run("scale", [&] { return probe(ad::scale(a, -1.7), k); }, {a});
  s.run("tanh", [&] { return probe(ad::tanh(a), k); }, {a});
  s.run("mish", [&] { return probe(ad::mish(ad::scale(a, 3.0)), k); }, {a});
  s.run("sum", [&] { return ad::sum(a); }, {a});
  s.run("mean", [&] { return ad::mean(ad::mul(a, a)); }, {a});
  s.run("reshape", [&] { return probe(ad::reshape(a, {6, 2}), k); }, {a});
  s.run("concat_rows", [&] { return probe(ad::concat({a, e}, 0), k); }, {a, e});
  s.run("concat_cols", [&] { return probe(ad::concat({a, f}, 1), k); }, {a, f});
  s.run("slice_rows", [&] { return probe(ad::slice(a, 0, 1, 3), k); }, {a});
  s.run("slice_cols", [&] { return probe(ad::slice(a, 1, 1, 3), k); }, {a});
  s.run("outer_add", [&] { return probe(ad::outer_add(a, e), k); }, {a, e});
  auto table = random({5, 3}, k + 8);
  const std::vector<int> ids{0, 3, 3, 1};
  s.run("embedding_lookup", [&] { return probe(ad::embedding_lookup(table, ids), k); }, {table});
  auto x = random({7, 3}, k + 9), w = random({3, 3, 4}, k + 10), bias = random({4}, k + 11);
  s.run("conv1d_stride1", [&] { return probe(ad::conv1d(x, w, bias, 1, 1), k); }, {x, w, bias});
  s.run("conv1d_stride2", [&] { return probe(ad::conv1d(x, w, bias, 2, 1), k); }, {x, w, bias});
  auto n = random({5, 8}, k + 12), g = random({8}, k + 13), be = random({8}, k + 14);
  s.run("group_norm", [&] { return probe(ad::group_norm(n, 4, g, be), k); }, {n, g, be});
  s.run("layer_norm", [&] { return probe(ad::layer_norm(n, g, be), k); }, {n, g, be});
  auto z = random({4, 6}, k + 15, 2.0);
  s.run("softmax", [&] { return probe(ad::softmax(z), k); }, {z});
  s.run("log_softmax", [&] { return probe(ad::log_softmax(z), k); }, {z});
  auto lattice = random({3 * 3, 4}, k + 16, 2.0);
  const std::vector<int> y{1, 3};
  s.run("transducer_loss",
        [&] { return rnnt::transducer_loss(ad::log_softmax(lattice), 3, y, 0); }, {lattice});
  return s.out;
}

// Every block of a model built from `cfg`, plus the end-to-end loss.
inline std::vector<NamedGradCheck> gradcheck_blocks(const model::ModelConfig& cfg,
                                                    const GradCheckOptions& o = {}) {
  using gc_detail::params_of;
  using gc_detail::probe;
  using gc_detail::random;
  using gc_detail::with;
  gc_detail::Suite s(o);
  const std::uint64_t k = o.seed * 1000 + 500;
  model::TransducerModel m(cfg, o.seed);
  const auto sz = [](int v) { return static_cast<std::size_t>(v); };

  auto mel = random({9, sz(cfg.n_mels)}, k + 1);
  s.run("frontend", [&] { return probe(m.frontend(mel), k); },
        with(params_of(m, "frontend."), {mel}));
  for (std::size_t t : {4u, 5u}) {
    auto h = random({t, sz(cfg.d_acoustic)}, k + 2 + t);
    s.run("subsample_t" + std::to_string(t), [&] { return probe(m.subsample(h), k); },
          with(params_of(m, "subsample."), {h}));
  }

  // Pitch input for 3200 samples at the configured hop.
  const std::size_t n_samples = 3200;
  model::ModelInput in;
  in.log_mel = random({n_samples / 160 + 1, sz(cfg.n_mels)}, k + 10, 1.0, false);
  std::mt19937_64 rng(k + 11);
  const std::size_t tp = signal::pitch_frame_count(n_samples, 16000, cfg.pitch_hop_ms);
  const int vocab = std::max(cfg.pitch_vocab(), 2);
  for (std::size_t i = 0; i < tp; ++i) {
    const bool voiced = rng() % 4 != 0;
    in.pitch_ids.push_back(voiced ? 1 + static_cast<int>(rng() % (vocab - 1)) : 0);
    in.pitch_values.push_back(voiced ? 0.1 + 0.003 * static_cast<double>(rng() % 100) : 0.0);
  }

  if (cfg.uses_pitch()) {
    const std::string embed =
        cfg.pitch_variant == model::PitchInput::kRawNoEmbed ? "pitch.lift" : "pitch.embed";
    s.run(embed, [&] { return probe(m.embed_pitch(in), k); }, params_of(m, embed));
    for (std::size_t u = 0; u < m.pitch_units.size(); ++u) {
      const std::size_t d_in = u == 0 ? sz(cfg.d_pitch_embed) : sz(cfg.fusion_dim);
      auto h = random({11, d_in}, k + 20 + u);
      const std::string name = "pitch.unit" + std::to_string(u);
      s.run(name, [&, u] { return probe(m.pitch_units[u](h), k); },
            with(params_of(m, name + "."), {h}));
    }
    if (cfg.uses_pfb()) {
      auto h = random({5, sz(cfg.fusion_dim)}, k + 30);
      s.run("fuse.pfb", [&] { return probe(m.fuse_pfb[0](h), k); },
            with(params_of(m, "fuse.pfb."), {h}));
    }
    auto a = random({4, sz(cfg.d_enc)}, k + 31), p = random({4, sz(cfg.fusion_dim)}, k + 32);
    s.run("fuse", [&] { return probe(m.fuse(a, p), k); }, with(params_of(m, "fuse."), {a, p}));
  }

  const std::vector<int> y{1, std::min(2, cfg.vocab_size - 1), 1};
  const auto ctx = m.decoder.prefix_contexts(y, 0);
  s.run("decoder", [&] { return probe(m.decoder(ctx), k); }, params_of(m, "decoder."));
  auto enc = random({3, sz(cfg.d_enc)}, k + 40), dec = random({4, sz(cfg.d_joint)}, k + 41, 0.5);
  s.run("joint", [&] { return probe(m.joint(enc, dec), k); },
        with(params_of(m, "joint."), {enc, dec}));

  std::vector<ad::Tensor> all;
  for (auto& [name, t] : m.parameters()) all.push_back(t);
  GradCheckOptions full = o;
  if (full.max_coords == 0) full.max_coords = 8;
  s.out.push_back({"model_loss", ad::grad_check([&] { return m.loss(in, y); }, all, full.eps,
                                                full.tol, full.max_coords, full.seed)});
  return s.out;
}

inline nlohmann::json to_json(const std::vector<NamedGradCheck>& checks) {
  nlohmann::json list = nlohmann::json::array();
  double worst = 0.0;
  bool passed = true;
  for (const auto& c : checks) {
    list.push_back({{"name", c.name},
                    {"max_rel_error", c.report.max_rel_error},
                    {"max_abs_error", c.report.max_abs_error},
                    {"coordinates", c.report.coordinates},
                    {"worst", c.report.worst},
                    {"passed", c.report.passed}});
    worst = std::max(worst, c.report.max_rel_error);
    passed = passed && c.report.passed;
  }
  return {{"checks", list}, {"max_rel_error", worst}, {"passed", passed}};
}

}  // namespace tonemdd::pipeline

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

// Named parameter storage and the small parametric layers built on it.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "tonemdd/autodiff/checkpoint.hpp"
#include "tonemdd/autodiff/ops.hpp"

namespace tonemdd::model {

using ad::Tensor;

// Owns every trainable tensor in creation order. Initialization draws from a
// single seeded engine, so the creation order fixes the initial weights.
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed) : rng_(seed) {}

  Tensor uniform(const std::string& name, ad::Shape shape, double limit) {
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<double> v(ad::numel_of(shape));
    for (auto& x : v) x = dist(rng_);
    return add(name, Tensor(std::move(shape), std::move(v), true));
  }

  Tensor normal(const std::string& name, ad::Shape shape, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<double> v(ad::numel_of(shape));
    for (auto& x : v) x = dist(rng_);
    return add(name, Tensor(std::move(shape), std::move(v), true));
  }

  Tensor constant(const std::string& name, ad::Shape shape, double value) {
    std::vector<double> v(ad::numel_of(shape), value);
    return add(name, Tensor(std::move(shape), std::move(v), true));
  }

  ad::NamedTensors& all() { return params_; }
  const ad::NamedTensors& all() const { return params_; }

 private:
  Tensor add(const std::string& name, Tensor t) {
    for (const auto& [n, _] : params_) {
      if (n == name) fail(ErrorCode::kInvalidArgument, "duplicate parameter name " + name);
    }
    params_.emplace_back(name, t);
    return t;
  }

  std::mt19937_64 rng_;
  ad::NamedTensors params_;
};

inline double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

struct Linear {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]

  static Linear make(ParameterStore& s, const std::string& name, std::size_t in,
                     std::size_t out) {
    return {s.uniform(name + ".weight", {in, out}, glorot_limit(in, out)),
            s.constant(name + ".bias", {out}, 0.0)};
  }

  Tensor operator()(const Tensor& x) const { return ad::add(ad::matmul(x, weight), bias); }
};

struct Conv1d {
  Tensor weight;  // [K x Cin x Cout]
  Tensor bias;    // [Cout]
  std::size_t stride = 1;
  std::size_t padding = 1;

  static Conv1d make(ParameterStore& s, const std::string& name, std::size_t kernel,
                     std::size_t in, std::size_t out, std::size_t stride, std::size_t padding) {
    return {s.uniform(name + ".weight", {kernel, in, out},
                      glorot_limit(kernel * in, kernel * out)),
            s.constant(name + ".bias", {out}, 0.0), stride, padding};
  }

  Tensor operator()(const Tensor& x) const {
    return ad::conv1d(x, weight, bias, stride, padding);
  }
};

struct Affine {
  Tensor gamma;
  Tensor beta;

  static Affine make(ParameterStore& s, const std::string& name, std::size_t dim) {
    return {s.constant(name + ".gamma", {dim}, 1.0), s.constant(name + ".beta", {dim}, 0.0)};
  }
};

struct Embedding {
  Tensor table;  // [vocab x dim]

  static Embedding make(ParameterStore& s, const std::string& name, std::size_t vocab,
                        std::size_t dim) {
    return {s.normal(name + ".table", {vocab, dim}, 1.0)};
  }

  Tensor operator()(std::span<const int> ids) const { return ad::embedding_lookup(table, ids); }
};

}  // namespace tonemdd::model

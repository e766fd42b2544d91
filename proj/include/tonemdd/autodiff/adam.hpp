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

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tonemdd/autodiff/tensor.hpp"

namespace tonemdd::ad {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moments per parameter; shapes always mirror the parameters.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::vector<std::int64_t> steps;
};

// One bias-corrected Adam update. Parameters with `frozen[i]` set are left
// untouched and their moments do not advance.
inline void adam_step(std::span<Tensor> params, std::span<const std::vector<double>> grads,
                      AdamState& state, const AdamOptions& opt,
                      const std::vector<bool>& frozen = {}) {
  if (grads.size() != params.size()) {
    fail(ErrorCode::kShapeMismatch, "adam_step: " + std::to_string(params.size()) +
                                        " parameters but " + std::to_string(grads.size()) +
                                        " gradients");
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), 0.0);
      state.v.emplace_back(p.numel(), 0.0);
      state.steps.push_back(0);
    }
  }
  if (state.m.size() != params.size()) {
    fail(ErrorCode::kShapeMismatch, "adam_step: optimizer state tracks " +
                                        std::to_string(state.m.size()) + " parameters, got " +
                                        std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i].numel() || state.m[i].size() != params[i].numel()) {
      fail(ErrorCode::kShapeMismatch,
           "adam_step: gradient/state size mismatch for parameter " + std::to_string(i) +
               " of shape " + shape_str(params[i].shape()));
    }
    if (!frozen.empty() && frozen[i]) continue;
    const auto t = ++state.steps[i];
    const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(t));
    auto w = params[i].mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double g = grads[i][k];
      m[k] = opt.beta1 * m[k] + (1.0 - opt.beta1) * g;
      v[k] = opt.beta2 * v[k] + (1.0 - opt.beta2) * g * g;
      w[k] -= opt.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + opt.eps);
    }
  }
}

// Convenience overload reading each parameter's accumulated gradient.
inline void adam_step(std::span<Tensor> params, AdamState& state, const AdamOptions& opt,
                      const std::vector<bool>& frozen = {}) {
  std::vector<std::vector<double>> grads;
  grads.reserve(params.size());
  for (const auto& p : params) {
    grads.emplace_back(p.has_grad() ? std::vector<double>(p.grad().begin(), p.grad().end())
                                    : std::vector<double>(p.numel(), 0.0));
  }
  adam_step(params, grads, state, opt, frozen);
}

}  // namespace tonemdd::ad

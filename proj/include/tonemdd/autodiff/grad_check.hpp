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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "tonemdd/autodiff/tensor.hpp"

namespace tonemdd::ad {

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t coordinates = 0;
  double tolerance = 0.0;
  bool passed = true;
  std::string worst;  // "<input>[<index>]" of the largest relative error
};

// Floor for the relative-error denominator. Central differences carry
// roughly 1e-11 of rounding noise, which would otherwise dominate gradients
// that vanish identically (e.g. an attention key bias).
inline constexpr double kGradFloor = 1e-6;

// |a - n| / max(|a|, |n|, kGradFloor)
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), kGradFloor});
}

// Compares reverse-mode gradients of the scalar `f()` with respect to each
// tensor in `inputs` against central finite differences. `f` must read the
// current values of `inputs`. With max_coords > 0 only that many randomly
// chosen coordinates per input are probed.
inline GradCheckReport grad_check(const std::function<Tensor()>& f,
                                  std::vector<Tensor> inputs, double eps, double tol,
                                  std::size_t max_coords = 0, std::uint64_t seed = 0) {
  std::vector<bool> previous;
  for (auto& x : inputs) {
    previous.push_back(x.requires_grad());
    x.set_requires_grad(true);
    x.zero_grad();
  }
  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    Tensor y;
    {
      TapeScope scope(tape);
      y = f();
    }
    tape.backward(y);
    for (auto& x : inputs) {
      analytic.emplace_back(x.has_grad() ? std::vector<double>(x.grad().begin(), x.grad().end())
                                         : std::vector<double>(x.numel(), 0.0));
    }
  }

  GradCheckReport report;
  report.tolerance = tol;
  std::mt19937_64 rng(seed);
  NoGradScope no_grad;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    auto values = inputs[t].mutable_data();
    std::vector<std::size_t> coords(values.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (max_coords > 0 && coords.size() > max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t i : coords) {
      const double original = values[i];
      values[i] = original + eps;
      const double plus = f().item();
      values[i] = original - eps;
      const double minus = f().item();
      values[i] = original;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = analytic[t][i];
      const double rel = relative_error(a, numeric);
      report.max_abs_error = std::max(report.max_abs_error, std::abs(a - numeric));
      if (rel >= report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = "input" + std::to_string(t) + "[" + std::to_string(i) + "]";
      }
      ++report.coordinates;
    }
  }
  report.passed = report.max_rel_error < tol;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    inputs[t].set_requires_grad(previous[t]);
  }
  return report;
}

inline GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x,
                                  double eps, double tol) {
  return grad_check([&] { return f(x); }, {x}, eps, tol);
}

}  // namespace tonemdd::ad

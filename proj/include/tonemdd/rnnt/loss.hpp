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

// Transducer loss over the (T, U+1) alignment lattice, computed exactly with
// log-space forward/backward recursions.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tonemdd/autodiff/ops.hpp"
#include "tonemdd/common/error.hpp"

namespace tonemdd::rnnt {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

// Log-normalized joint outputs, laid out [T][U+1][V].
struct LogLattice {
  std::size_t frames = 0;
  std::size_t labels = 0;  // U
  std::size_t vocab = 0;
  int blank_id = 0;
  std::vector<double> log_probs;

  std::size_t index(std::size_t t, std::size_t u, std::size_t k) const {
    return (t * (labels + 1) + u) * vocab + k;
  }
  double at(std::size_t t, std::size_t u, std::size_t k) const {
    return log_probs[index(t, u, k)];
  }
};

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d log_probs, same layout as the lattice
};

inline void validate(const LogLattice& lat, std::span<const int> y) {
  if (lat.frames == 0 || lat.vocab == 0) fail(ErrorCode::kInvalidArgument, "empty lattice");
  if (lat.log_probs.size() != lat.frames * (lat.labels + 1) * lat.vocab) {
    fail(ErrorCode::kShapeMismatch, "lattice buffer does not match T x (U+1) x V");
  }
  if (y.size() != lat.labels) {
    fail(ErrorCode::kShapeMismatch, "label count " + std::to_string(y.size()) +
                                        " does not match lattice U = " +
                                        std::to_string(lat.labels));
  }
  for (int l : y) {
    if (l < 0 || static_cast<std::size_t>(l) >= lat.vocab || l == lat.blank_id) {
      fail(ErrorCode::kInvalidArgument, "invalid label id " + std::to_string(l));
    }
  }
}

inline LossResult rnnt_loss(const LogLattice& lat, std::span<const int> y) {
  validate(lat, y);
  const std::size_t T = lat.frames, U = lat.labels, B = static_cast<std::size_t>(lat.blank_id);
  const std::size_t W = U + 1;
  auto blank = [&](std::size_t t, std::size_t u) { return lat.at(t, u, B); };
  auto emit = [&](std::size_t t, std::size_t u) {
    return lat.at(t, u, static_cast<std::size_t>(y[u]));
  };

  std::vector<double> alpha(T * W, kNegInf);
  alpha[0] = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u < W; ++u) {
      if (t == 0 && u == 0) continue;
      double a = kNegInf;
      if (t > 0) a = alpha[(t - 1) * W + u] + blank(t - 1, u);
      if (u > 0) a = log_add_exp(a, alpha[t * W + u - 1] + emit(t, u - 1));
      alpha[t * W + u] = a;
    }
  }
  std::vector<double> beta(T * W, kNegInf);
  beta[(T - 1) * W + U] = blank(T - 1, U);
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t u = W; u-- > 0;) {
      if (t == T - 1 && u == U) continue;
      double b = kNegInf;
      if (t + 1 < T) b = beta[(t + 1) * W + u] + blank(t, u);
      if (u < U) b = log_add_exp(b, beta[t * W + u + 1] + emit(t, u));
      beta[t * W + u] = b;
    }
  }

  const double log_z = alpha[(T - 1) * W + U] + blank(T - 1, U);
  LossResult r;
  r.loss = -log_z;
  r.grad.assign(lat.log_probs.size(), 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u < W; ++u) {
      const double a = alpha[t * W + u];
      // blank transition (t,u) -> (t+1,u), or the final blank
      const double next_b = t + 1 < T ? beta[(t + 1) * W + u] : (u == U ? 0.0 : kNegInf);
      if (next_b != kNegInf) {
        r.grad[lat.index(t, u, B)] = -std::exp(a + blank(t, u) + next_b - log_z);
      }
      if (u < U) {
        r.grad[lat.index(t, u, static_cast<std::size_t>(y[u]))] =
            -std::exp(a + emit(t, u) + beta[t * W + u + 1] - log_z);
      }
    }
  }
  return r;
}

// Differentiable wrapper: `log_probs` is [T*(U+1) x V], rows ordered (t, u).
inline ad::Tensor transducer_loss(const ad::Tensor& log_probs, std::size_t frames,
                                  std::span<const int> y, int blank_id = 0) {
  if (log_probs.rank() != 2 || log_probs.dim(0) != frames * (y.size() + 1)) {
    fail(ErrorCode::kShapeMismatch, "transducer_loss: log_probs " +
                                        ad::shape_str(log_probs.shape()) + " vs T=" +
                                        std::to_string(frames) + ", U=" +
                                        std::to_string(y.size()));
  }
  LogLattice lat{frames, y.size(), log_probs.dim(1), blank_id,
                 std::vector<double>(log_probs.data().begin(), log_probs.data().end())};
  LossResult r = rnnt_loss(lat, y);
  auto in = log_probs.node();
  return ad::custom_op({}, {r.loss}, {&log_probs},
                       [in, grad = std::move(r.grad)](const std::shared_ptr<ad::Node>& out) {
                         double* g = ad::detail::grad_of(in);
                         if (g == nullptr) return;
                         const double up = out->grad[0];
                         for (std::size_t i = 0; i < grad.size(); ++i) g[i] += up * grad[i];
                       });
}

}  // namespace tonemdd::rnnt

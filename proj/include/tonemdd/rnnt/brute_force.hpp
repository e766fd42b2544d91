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

// Reference transducer loss by explicit enumeration of every alignment.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "tonemdd/rnnt/loss.hpp"

namespace tonemdd::rnnt {

inline constexpr std::size_t kOracleMaxSteps = 16;

// Alignments end with the blank leaving (T-1, U), so there are
// C(T-1+U, U) of them.
inline std::uint64_t alignment_count(std::size_t frames, std::size_t labels) {
  std::uint64_t c = 1;
  const std::size_t n = frames - 1 + labels;
  for (std::size_t i = 1; i <= labels; ++i) c = c * (n - labels + i) / i;
  return c;
}

struct Enumeration {
  double loss = 0.0;
  std::size_t paths = 0;
};

inline Enumeration enumerate_alignments(const LogLattice& lat, std::span<const int> y) {
  validate(lat, y);
  if (lat.frames + lat.labels > kOracleMaxSteps) {
    fail(ErrorCode::kOracleLimit, "instance too large for oracle");
  }
  const std::size_t T = lat.frames, U = lat.labels;
  const auto B = static_cast<std::size_t>(lat.blank_id);
  std::vector<double> path_scores;
  // Iterative DFS over (t, u, accumulated log-prob).
  struct State {
    std::size_t t, u;
    double score;
  };
  std::vector<State> stack{{0, 0, 0.0}};
  while (!stack.empty()) {
    State s = stack.back();
    stack.pop_back();
    if (s.t == T - 1 && s.u == U) {
      path_scores.push_back(s.score + lat.at(s.t, s.u, B));
      continue;
    }
    if (s.u < U) {
      stack.push_back({s.t, s.u + 1, s.score + lat.at(s.t, s.u, static_cast<std::size_t>(y[s.u]))});
    }
    if (s.t + 1 < T) stack.push_back({s.t + 1, s.u, s.score + lat.at(s.t, s.u, B)});
  }
  const double hi = *std::max_element(path_scores.begin(), path_scores.end());
  double acc = 0.0;
  for (double p : path_scores) acc += std::exp(p - hi);
  return {-(hi + std::log(acc)), path_scores.size()};
}

inline double brute_force_loss(const LogLattice& lat, std::span<const int> y) {
  return enumerate_alignments(lat, y).loss;
}

}  // namespace tonemdd::rnnt

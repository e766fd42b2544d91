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

// Unit-cost Levenshtein alignment with a fixed tie-break order.

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tonemdd/common/error.hpp"

namespace tonemdd::eval {

enum class EditKind { kMatch, kSubstitution, kDeletion, kInsertion };

// ref_index / hyp_index are -1 where the step does not consume that side.
struct EditOp {
  EditKind kind;
  std::ptrdiff_t ref_index;
  std::ptrdiff_t hyp_index;
};

struct Alignment {
  std::vector<EditOp> ops;
  std::size_t cost = 0;

  std::size_t count(EditKind k) const {
    return static_cast<std::size_t>(
        std::count_if(ops.begin(), ops.end(), [k](const EditOp& e) { return e.kind == k; }));
  }
};

// Minimal edit script turning `ref` into `hyp`. At equal cost the backtrace
// prefers match, then substitution, then deletion, then insertion.
template <typename T>
Alignment align(std::span<const T> ref, std::span<const T> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  Alignment a;
  a.cost = at(n, m);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const std::size_t cur = at(i, j);
    const auto ri = static_cast<std::ptrdiff_t>(i) - 1;
    const auto hj = static_cast<std::ptrdiff_t>(j) - 1;
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && cur == at(i - 1, j - 1)) {
      a.ops.push_back({EditKind::kMatch, ri, hj});
      --i, --j;
    } else if (i > 0 && j > 0 && ref[i - 1] != hyp[j - 1] && cur == at(i - 1, j - 1) + 1) {
      a.ops.push_back({EditKind::kSubstitution, ri, hj});
      --i, --j;
    } else if (i > 0 && cur == at(i - 1, j) + 1) {
      a.ops.push_back({EditKind::kDeletion, ri, -1});
      --i;
    } else {
      a.ops.push_back({EditKind::kInsertion, -1, hj});
      --j;
    }
  }
  std::reverse(a.ops.begin(), a.ops.end());
  return a;
}

template <typename T>
Alignment align(const std::vector<T>& ref, const std::vector<T>& hyp) {
  return align(std::span<const T>(ref), std::span<const T>(hyp));
}

// Phoneme error rate (S + D + I) / N against a non-empty reference.
template <typename T>
double per(const std::vector<T>& ref, const std::vector<T>& hyp) {
  if (ref.empty()) fail(ErrorCode::kInvalidArgument, "PER needs a non-empty reference");
  return static_cast<double>(align(ref, hyp).cost) / static_cast<double>(ref.size());
}

}  // namespace tonemdd::eval

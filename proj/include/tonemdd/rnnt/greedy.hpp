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
#include <cstddef>
#include <span>
#include <vector>

namespace tonemdd::rnnt {

inline constexpr std::size_t kDefaultMaxSymbolsPerFrame = 10;

// Frame-synchronous greedy search. `logits(t, context)` returns joint scores
// over the vocabulary for frame t given the last `context_size` emitted
// labels (left-padded with blank). Ties resolve to the lowest id.
template <typename LogitsFn>
std::vector<int> greedy_search(std::size_t frames, std::size_t context_size, int blank_id,
                               std::size_t max_symbols_per_frame, LogitsFn&& logits) {
  std::vector<int> hyp;
  std::vector<int> context(context_size, blank_id);
  std::size_t t = 0, emitted_here = 0;
  while (t < frames) {
    const auto scores = logits(t, std::span<const int>(context));
    const auto best = static_cast<int>(
        std::max_element(scores.begin(), scores.end()) - scores.begin());
    if (best == blank_id) {
      ++t;
      emitted_here = 0;
      continue;
    }
    hyp.push_back(best);
    if (context_size > 0) {
      std::rotate(context.begin(), context.begin() + 1, context.end());
      context.back() = best;
    }
    if (++emitted_here >= max_symbols_per_frame) {
      ++t;
      emitted_here = 0;
    }
  }
  return hyp;
}

}  // namespace tonemdd::rnnt

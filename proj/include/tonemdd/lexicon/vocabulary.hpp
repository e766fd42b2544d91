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

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tonemdd/common/error.hpp"
#include "tonemdd/lexicon/phoneme.hpp"

namespace tonemdd::lexicon {

inline constexpr int kBlankId = 0;
inline constexpr const char* kBlankToken = "<blank>";

// Label ids over a Vocabulary; never contains the blank.
using PhonemeSeq = std::vector<int>;

// Dense token ids with the blank at 0, followed by the inventory in order.
class Vocabulary {
 public:
  explicit Vocabulary(const Inventory& inv) : inventory_(inv) {
    tokens_.push_back(kBlankToken);
    for (const auto& t : inv.tokens()) tokens_.push_back(t);
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      ids_.emplace(tokens_[i], static_cast<int>(i));
    }
  }

  int size() const { return static_cast<int>(tokens_.size()); }
  int blank_id() const { return kBlankId; }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const Inventory& inventory() const { return inventory_; }

  int id(const std::string& token) const {
    auto it = ids_.find(token);
    if (it == ids_.end() || it->second == kBlankId) {
      fail(ErrorCode::kOutOfVocabulary, "out-of-vocabulary symbol '" + token + "'");
    }
    return it->second;
  }

  bool contains(const std::string& token) const {
    auto it = ids_.find(token);
    return it != ids_.end() && it->second != kBlankId;
  }

  PhonemeSeq encode(std::span<const TonalPhoneme> seq) const {
    PhonemeSeq ids;
    ids.reserve(seq.size());
    for (const auto& p : seq) ids.push_back(id(p.symbol()));
    return ids;
  }

  PhonemeSeq encode_tokens(std::span<const std::string> tokens) const {
    PhonemeSeq ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
  }

  std::vector<TonalPhoneme> decode(std::span<const int> ids) const {
    std::vector<TonalPhoneme> out;
    out.reserve(ids.size());
    for (int i : ids) {
      if (i <= kBlankId || i >= size()) {
        fail(ErrorCode::kOutOfVocabulary, "label id " + std::to_string(i) +
                                              " outside [1, " + std::to_string(size()) + ")");
      }
      out.push_back(phoneme_from_symbol(tokens_[static_cast<std::size_t>(i)]));
    }
    return out;
  }

  std::vector<std::string> symbols(std::span<const int> ids) const {
    std::vector<std::string> out;
    for (const auto& p : decode(ids)) out.push_back(p.symbol());
    return out;
  }

 private:
  Inventory inventory_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace tonemdd::lexicon

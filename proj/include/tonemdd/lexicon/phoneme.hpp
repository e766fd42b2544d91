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

// Initial-final-tone decomposition of pinyin syllables.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tonemdd/common/error.hpp"

namespace tonemdd::lexicon {

enum class PhonemeKind { kInitial, kTonalFinal };

struct TonalPhoneme {
  PhonemeKind kind = PhonemeKind::kInitial;
  std::string base;
  int tone = 0;  // 0 for initials, 1..5 for tonal finals

  // Vocabulary token: "zh" for initials, "ong1" for tonal finals.
  std::string symbol() const {
    return kind == PhonemeKind::kInitial ? base : base + std::to_string(tone);
  }

  friend bool operator==(const TonalPhoneme&, const TonalPhoneme&) = default;
};

inline bool is_tone_digit(char c) { return c >= '1' && c <= '5'; }

// Splits a vocabulary token back into a phoneme.
inline TonalPhoneme phoneme_from_symbol(std::string_view token) {
  if (token.empty()) fail(ErrorCode::kParse, "empty phoneme token");
  if (is_tone_digit(token.back())) {
    if (token.size() < 2) fail(ErrorCode::kParse, "tonal final without base");
    return {PhonemeKind::kTonalFinal, std::string(token.substr(0, token.size() - 1)),
            token.back() - '0'};
  }
  return {PhonemeKind::kInitial, std::string(token), 0};
}

// Closed inventory of initials and tonal finals, in file order.
class Inventory {
 public:
  Inventory() = default;

  explicit Inventory(const std::vector<std::string>& tokens) {
    for (const auto& t : tokens) add(t);
  }

  static Inventory parse(std::istream& in) {
    Inventory inv;
    std::string line;
    while (std::getline(in, line)) {
      auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#') continue;
      auto e = line.find_last_not_of(" \t\r");
      inv.add(line.substr(b, e - b + 1));
    }
    return inv;
  }

  static Inventory load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::kIo, "cannot open inventory " + path.string());
    return parse(in);
  }

  void add(const std::string& token) {
    if (contains(token)) return;
    auto p = phoneme_from_symbol(token);
    if (p.kind == PhonemeKind::kInitial) {
      initials_.insert(token);
      max_initial_len_ = std::max(max_initial_len_, token.size());
    } else {
      finals_.insert(token);
    }
    tokens_.push_back(token);
  }

  bool contains(const std::string& token) const {
    return initials_.count(token) != 0 || finals_.count(token) != 0;
  }
  bool is_initial(std::string_view s) const {
    return initials_.count(std::string(s)) != 0;
  }
  bool is_tonal_final(const std::string& token) const {
    return finals_.count(token) != 0;
  }

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  std::size_t initial_count() const { return initials_.size(); }
  std::size_t final_count() const { return finals_.size(); }
  std::size_t max_initial_length() const { return max_initial_len_; }

  std::string to_text() const {
    std::ostringstream out;
    for (const auto& t : tokens_) out << t << '\n';
    return out.str();
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_set<std::string> initials_;
  std::unordered_set<std::string> finals_;
  std::size_t max_initial_len_ = 0;
};

namespace detail {

// Zero-initial y/w spellings mapped onto the finals they spell.
inline const std::unordered_map<std::string, std::string>& zero_initial_spellings() {
  static const std::unordered_map<std::string, std::string> table = {
      {"yi", "i"},     {"ya", "ia"},     {"yo", "io"},     {"ye", "ie"},
      {"yao", "iao"},  {"you", "iu"},    {"yan", "ian"},   {"yin", "in"},
      {"yang", "iang"}, {"ying", "ing"}, {"yong", "iong"}, {"yu", "v"},
      {"yue", "ve"},   {"yuan", "van"},  {"yun", "vn"},    {"wu", "u"},
      {"wa", "ua"},    {"wo", "uo"},     {"wai", "uai"},   {"wei", "ui"},
      {"wan", "uan"},  {"wen", "un"},    {"wang", "uang"}, {"weng", "ueng"},
  };
  return table;
}

inline std::string respell_zero_initial(const std::string& body) {
  const auto& t = zero_initial_spellings();
  auto it = t.find(body);
  return it == t.end() ? body : it->second;
}

// Lowercase ASCII letters plus u-umlaut (UTF-8 or 'v'); umlaut becomes 'v'.
inline bool normalize_letters(std::string_view in, std::string& out) {
  out.clear();
  for (std::size_t i = 0; i < in.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(in[i]);
    if (c >= 'a' && c <= 'z') {
      out.push_back(static_cast<char>(c));
    } else if (c == 0xC3 && i + 1 < in.size() &&
               static_cast<unsigned char>(in[i + 1]) == 0xBC) {
      out.push_back('v');
      ++i;
    } else {
      return false;
    }
  }
  return !out.empty();
}

}  // namespace detail

// Splits a tone-marked pinyin syllable ("zhong1") into an optional initial
// and a tonal final. The initial is the longest inventory prefix; when the
// syllable has no initial it becomes a single tonal final.
inline std::vector<TonalPhoneme> parse_syllable(std::string_view pinyin,
                                                const Inventory& inv) {
  if (pinyin.empty() || !is_tone_digit(pinyin.back())) {
    fail(ErrorCode::kParse, "missing tone in '" + std::string(pinyin) + "'");
  }
  const int tone = pinyin.back() - '0';
  std::string body;
  if (!detail::normalize_letters(pinyin.substr(0, pinyin.size() - 1), body)) {
    fail(ErrorCode::kParse, "unparseable syllable '" + std::string(pinyin) + "'");
  }
  const std::string tone_digit = std::to_string(tone);

  for (std::size_t len = std::min(inv.max_initial_length(), body.size()); len > 0;
       --len) {
    std::string_view head(body.data(), len);
    if (!inv.is_initial(head)) continue;
    const std::string initial(head);
    const std::string rest = body.substr(len);
    if (!rest.empty()) {
      std::vector<std::string> candidates;
      // j/q/x + u spells u-umlaut
      if ((initial == "j" || initial == "q" || initial == "x") && rest[0] == 'u') {
        candidates.push_back("v" + rest.substr(1));
      }
      candidates.push_back(rest);
      for (const auto& c : candidates) {
        if (inv.is_tonal_final(c + tone_digit)) {
          return {{PhonemeKind::kInitial, initial, 0},
                  {PhonemeKind::kTonalFinal, c, tone}};
        }
      }
    }
    break;  // longest match only; shorter initials are never tried
  }

  const std::string whole = detail::respell_zero_initial(body);
  if (inv.is_tonal_final(whole + tone_digit)) {
    return {{PhonemeKind::kTonalFinal, whole, tone}};
  }
  fail(ErrorCode::kParse, "unparseable syllable '" + std::string(pinyin) + "'");
}

// Parses a whitespace-separated transcript of syllables.
inline std::vector<TonalPhoneme> parse_transcript(std::string_view text,
                                                  const Inventory& inv) {
  std::vector<TonalPhoneme> out;
  std::istringstream in{std::string(text)};
  std::string syl;
  while (in >> syl) {
    auto parts = parse_syllable(syl, inv);
    out.insert(out.end(), parts.begin(), parts.end());
  }
  return out;
}

}  // namespace tonemdd::lexicon

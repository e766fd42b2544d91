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

#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "tonemdd/lexicon/vocabulary.hpp"

namespace tonemdd::lexicon {
namespace {

const Inventory& mandarin() {
  static const Inventory inv = Inventory::load(TONEMDD_DATA_DIR "/mandarin_inventory.txt");
  return inv;
}

std::vector<std::string> initials() {
  std::vector<std::string> out;
  for (const auto& t : mandarin().tokens()) {
    if (phoneme_from_symbol(t).kind == PhonemeKind::kInitial) out.push_back(t);
  }
  return out;
}

std::set<std::string> final_bases() {
  std::set<std::string> out;
  for (const auto& t : mandarin().tokens()) {
    auto p = phoneme_from_symbol(t);
    if (p.kind == PhonemeKind::kTonalFinal) out.insert(p.base);
  }
  return out;
}

ErrorCode parse_error(std::string_view s) {
  try {
    parse_syllable(s, mandarin());
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;
}

TEST(InventoryTest, MandarinHas214TonalPhonemes) {
  EXPECT_EQ(mandarin().size(), 214u);
  EXPECT_EQ(mandarin().initial_count(), 21u);
  EXPECT_EQ(mandarin().final_count(), 193u);
  const Vocabulary v(mandarin());
  EXPECT_EQ(v.size(), 215);
  EXPECT_EQ(v.token(kBlankId), kBlankToken);
}

TEST(InventoryTest, ParseSkipsCommentsAndRoundTrips) {
  std::istringstream in("# header\nb\n\n  a1 \n# c\nzh\n");
  const auto inv = Inventory::parse(in);
  EXPECT_EQ(inv.tokens(), (std::vector<std::string>{"b", "a1", "zh"}));
  std::istringstream again(inv.to_text());
  EXPECT_EQ(Inventory::parse(again).tokens(), inv.tokens());
  EXPECT_THROW(Inventory::load("/nonexistent/inventory.txt"), Error);
}

TEST(ParseSyllableTest, Examples) {
  using P = TonalPhoneme;
  EXPECT_EQ(parse_syllable("zhong1", mandarin()),
            (std::vector<P>{{PhonemeKind::kInitial, "zh", 0},
                            {PhonemeKind::kTonalFinal, "ong", 1}}));
  EXPECT_EQ(parse_syllable("an4", mandarin()),
            (std::vector<P>{{PhonemeKind::kTonalFinal, "an", 4}}));
  EXPECT_EQ(parse_syllable("shi3", mandarin()),
            (std::vector<P>{{PhonemeKind::kInitial, "sh", 0},
                            {PhonemeKind::kTonalFinal, "i", 3}}));
}

TEST(ParseSyllableTest, ZeroInitialAndUmlautSpellings) {
  auto symbols = [](std::string_view s) {
    std::vector<std::string> out;
    for (const auto& p : parse_syllable(s, mandarin())) out.push_back(p.symbol());
    return out;
  };
  EXPECT_EQ(symbols("yi1"), (std::vector<std::string>{"i1"}));
  EXPECT_EQ(symbols("wei4"), (std::vector<std::string>{"ui4"}));
  EXPECT_EQ(symbols("yu2"), (std::vector<std::string>{"v2"}));
  EXPECT_EQ(symbols("ju3"), (std::vector<std::string>{"j", "v3"}));
  EXPECT_EQ(symbols("xue2"), (std::vector<std::string>{"x", "ve2"}));
  EXPECT_EQ(symbols("l\xC3\xBC" "4"), (std::vector<std::string>{"l", "v4"}));
  EXPECT_EQ(symbols("lv4"), (std::vector<std::string>{"l", "v4"}));
  EXPECT_EQ(symbols("er2"), (std::vector<std::string>{"er2"}));
  EXPECT_EQ(symbols("ng2"), (std::vector<std::string>{"ng2"}));
  EXPECT_EQ(symbols("m2"), (std::vector<std::string>{"m2"}));
}

TEST(ParseSyllableTest, LongestMatchNeverSplitsRetroflexes) {
  for (const std::string init : {"zh", "ch", "sh"}) {
    for (const auto& base : final_bases()) {
      const std::string s = init + base + "1";
      std::vector<TonalPhoneme> parts;
      try {
        parts = parse_syllable(s, mandarin());
      } catch (const Error&) {
        continue;
      }
      if (parts.size() == 2) {
        EXPECT_EQ(parts[0].base, init) << s;
      }
    }
  }
}

TEST(ParseSyllableTest, TotalOnInitialFinalToneProduct) {
  std::size_t checked = 0;
  for (int tone = 1; tone <= 5; ++tone) {
    const std::string digit = std::to_string(tone);
    for (const auto& base : final_bases()) {
      if (!mandarin().is_tonal_final(base + digit)) continue;
      const auto bare = parse_syllable(base + digit, mandarin());
      ASSERT_EQ(bare.size(), 1u) << base;
      EXPECT_EQ(bare[0].symbol(), base + digit);
      for (const auto& init : initials()) {
        const auto parts = parse_syllable(init + base + digit, mandarin());
        ASSERT_EQ(parts.size(), 2u) << init << base;
        EXPECT_EQ(parts[0].symbol(), init);
        // j/q/x + u spells the umlaut final when one exists
        const bool umlaut = (init == "j" || init == "q" || init == "x") && base[0] == 'u' &&
                            mandarin().is_tonal_final("v" + base.substr(1) + digit);
        EXPECT_EQ(parts[1].symbol(), (umlaut ? "v" + base.substr(1) : base) + digit);
        ++checked;
      }
    }
  }
  EXPECT_EQ(checked, 21u * 193u);
}

TEST(ParseSyllableTest, RejectsMalformedInput) {
  EXPECT_EQ(parse_error("zhong"), ErrorCode::kParse);
  EXPECT_EQ(parse_error("zhong6"), ErrorCode::kParse);
  EXPECT_EQ(parse_error(""), ErrorCode::kParse);
  EXPECT_EQ(parse_error("1"), ErrorCode::kParse);
  EXPECT_EQ(parse_error("zh1"), ErrorCode::kParse);
  EXPECT_EQ(parse_error("bxq2"), ErrorCode::kParse);
  EXPECT_EQ(parse_error("Zhong1"), ErrorCode::kParse);
  try {
    parse_syllable("zhong", mandarin());
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("missing tone"), std::string::npos);
  }
  try {
    parse_syllable("bxq2", mandarin());
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("unparseable syllable"), std::string::npos);
  }
}

TEST(ParseSyllableTest, RandomStringsParseOnlyIntoInventory) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> len(1, 6), letter(0, 25), tone(0, 6);
  for (int i = 0; i < 5000; ++i) {
    std::string s;
    for (int k = len(rng); k > 0; --k) s.push_back(static_cast<char>('a' + letter(rng)));
    s += std::to_string(tone(rng));
    try {
      for (const auto& p : parse_syllable(s, mandarin())) {
        EXPECT_TRUE(mandarin().contains(p.symbol())) << s;
      }
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kParse);
    }
  }
}

TEST(VocabularyTest, EncodeDecodeRoundTrip) {
  const Vocabulary v(mandarin());
  EXPECT_TRUE(v.encode(std::vector<TonalPhoneme>{}).empty());
  const auto inits = initials();
  const auto bases = final_bases();
  const std::vector<std::string> finals(bases.begin(), bases.end());
  std::mt19937_64 rng(7);
  std::vector<TonalPhoneme> seq;
  for (int i = 0; i < 1000; ++i) {
    const auto& fin = finals[rng() % finals.size()];
    const int tone = 1 + static_cast<int>(rng() % 5);
    if (!mandarin().is_tonal_final(fin + std::to_string(tone))) continue;
    if (rng() % 2) seq.push_back({PhonemeKind::kInitial, inits[rng() % inits.size()], 0});
    seq.push_back({PhonemeKind::kTonalFinal, fin, tone});
  }
  const auto ids = v.encode(seq);
  for (int id : ids) {
    EXPECT_GT(id, kBlankId);
    EXPECT_LT(id, v.size());
  }
  EXPECT_EQ(v.decode(ids), seq);
}

TEST(VocabularyTest, OutOfVocabularyNamesSymbol) {
  const Vocabulary toy(Inventory({"b", "a1", "a2"}));
  EXPECT_EQ(toy.size(), 4);
  try {
    toy.id("zh");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfVocabulary);
    EXPECT_NE(std::string(e.what()).find("zh"), std::string::npos);
  }
  EXPECT_THROW(toy.id(kBlankToken), Error);
  const std::vector<int> blank{0};
  EXPECT_THROW(toy.decode(blank), Error);
  const std::vector<int> high{4};
  EXPECT_THROW(toy.decode(high), Error);
}

TEST(TranscriptTest, ParsesWhitespaceSeparatedSyllables) {
  const auto seq = parse_transcript(" ni3  hao3\tzhong1 ", mandarin());
  std::vector<std::string> sym;
  for (const auto& p : seq) sym.push_back(p.symbol());
  EXPECT_EQ(sym, (std::vector<std::string>{"n", "i3", "h", "ao3", "zh", "ong1"}));
  EXPECT_TRUE(parse_transcript("   ", mandarin()).empty());
}

}  // namespace
}  // namespace tonemdd::lexicon

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

// JSON-lines utterance manifests: {utt_id, audio, canonical, annotated}.

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tonemdd/common/error.hpp"
#include "tonemdd/lexicon/phoneme.hpp"

namespace tonemdd::pipeline {

struct Utterance {
  std::string utt_id;
  std::filesystem::path audio;  // resolved against the manifest directory
  std::vector<std::string> canonical;  // tone-marked syllables
  std::vector<std::string> annotated;
};

using Manifest = std::vector<Utterance>;

inline nlohmann::json to_json(const Utterance& u, const std::filesystem::path& base = {}) {
  const auto audio = base.empty() ? u.audio : std::filesystem::relative(u.audio, base);
  return {{"utt_id", u.utt_id},
          {"audio", audio.generic_string()},
          {"canonical", u.canonical},
          {"annotated", u.annotated}};
}

// Loads a manifest; relative audio paths resolve against its directory and
// must exist.
inline Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open manifest " + path.string());
  const auto base = path.parent_path();
  Manifest out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    Utterance u;
    try {
      const auto j = nlohmann::json::parse(line);
      u.utt_id = j.at("utt_id").get<std::string>();
      u.audio = j.at("audio").get<std::string>();
      u.canonical = j.at("canonical").get<std::vector<std::string>>();
      u.annotated = j.at("annotated").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kParse, where + ": " + e.what());
    }
    if (u.audio.is_relative()) u.audio = base / u.audio;
    if (!std::filesystem::exists(u.audio)) {
      fail(ErrorCode::kIo, where + ": audio file " + u.audio.string() + " does not exist");
    }
    out.push_back(std::move(u));
  }
  return out;
}

inline void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write manifest " + path.string());
  const auto base = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
  for (const auto& u : m) out << to_json(u, base).dump() << '\n';
  if (!out) fail(ErrorCode::kIo, "short write to " + path.string());
}

// Syllables to phoneme symbols ("ba1" -> "b", "a1").
inline std::vector<std::string> phoneme_symbols(const std::vector<std::string>& syllables,
                                                const lexicon::Inventory& inv) {
  std::vector<std::string> out;
  for (const auto& s : syllables) {
    for (const auto& p : lexicon::parse_syllable(s, inv)) out.push_back(p.symbol());
  }
  return out;
}

}  // namespace tonemdd::pipeline

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

// Corpus-level scoring over JSON-lines manifests, plus tone-error tallies.

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tonemdd/eval/mdd.hpp"
#include "tonemdd/lexicon/phoneme.hpp"

namespace tonemdd::eval {

using Symbols = std::vector<std::string>;

struct EvalRecord {
  std::string utt_id;
  Symbols canonical, annotated, predicted;
};

inline EvalRecord eval_record_from_json(const nlohmann::json& j) {
  try {
    return {j.at("utt_id").get<std::string>(), j.at("canonical").get<Symbols>(),
            j.at("annotated").get<Symbols>(), j.at("predicted").get<Symbols>()};
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("bad evaluation record: ") + e.what());
  }
}

inline nlohmann::json to_json(const EvalRecord& r) {
  return {{"utt_id", r.utt_id},
          {"canonical", r.canonical},
          {"annotated", r.annotated},
          {"predicted", r.predicted}};
}

inline std::vector<EvalRecord> read_eval_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<EvalRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(eval_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::kParse, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// True when both tokens are tonal finals sharing a base but not a tone.
inline bool is_tone_substitution(const std::string& ref, const std::string& hyp) {
  if (ref.empty() || hyp.empty()) return false;
  if (!lexicon::is_tone_digit(ref.back()) || !lexicon::is_tone_digit(hyp.back())) return false;
  return ref.back() != hyp.back() &&
         ref.compare(0, ref.size() - 1, hyp, 0, hyp.size() - 1) == 0;
}

// Substitutions in the alignment of hyp against ref that change only the tone.
inline std::size_t tone_substitutions(const Symbols& ref, const Symbols& hyp) {
  std::size_t n = 0;
  for (const auto& op : align(ref, hyp).ops) {
    if (op.kind == EditKind::kSubstitution &&
        is_tone_substitution(ref[static_cast<std::size_t>(op.ref_index)],
                             hyp[static_cast<std::size_t>(op.hyp_index)])) {
      ++n;
    }
  }
  return n;
}

struct CorpusScore {
  MddReport report;
  std::vector<MddCounts> utterances;
  std::size_t tone_substitutions = 0;  // predicted vs annotated
  std::optional<double> tone_substitution_rate;  // over annotated phones
};

inline CorpusScore score_corpus(const std::vector<EvalRecord>& records) {
  CorpusScore s;
  for (const auto& r : records) {
    s.utterances.push_back(classify(r.canonical, r.annotated, r.predicted).counts);
    s.tone_substitutions += tone_substitutions(r.annotated, r.predicted);
  }
  s.report = aggregate(s.utterances);
  s.tone_substitution_rate = ratio(s.tone_substitutions, s.report.counts.reference_phones);
  return s;
}

inline nlohmann::json to_json(const CorpusScore& s) {
  auto j = to_json(s.report);
  j["utterances"] = s.utterances.size();
  j["tone_substitutions"] = s.tone_substitutions;
  j["tone_substitution_rate"] = s.tone_substitution_rate
                                    ? nlohmann::json(*s.tone_substitution_rate)
                                    : nlohmann::json(nullptr);
  return j;
}

inline std::string per_utterance_tsv(const std::vector<EvalRecord>& records,
                                     const CorpusScore& s) {
  std::ostringstream out;
  out << "utt_id\tta\tfr\tfa\ttr\tcd\tde\tedits\treference_phones\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& c = s.utterances[i];
    out << records[i].utt_id << '\t' << c.ta << '\t' << c.fr << '\t' << c.fa << '\t' << c.tr
        << '\t' << c.cd << '\t' << c.de << '\t' << c.edits << '\t' << c.reference_phones
        << '\n';
  }
  return out.str();
}

}  // namespace tonemdd::eval

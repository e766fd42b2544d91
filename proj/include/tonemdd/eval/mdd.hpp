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

// Mispronunciation detection and diagnosis scoring: per canonical phone,
// compare what was said (annotated) and what was recognized (predicted).

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tonemdd/eval/align.hpp"

namespace tonemdd::eval {

enum class Outcome { kTrueAcceptance, kFalseRejection, kFalseAcceptance, kTrueRejection };

template <typename T>
struct AlignedTriple {
  T canonical;
  std::optional<T> annotated;  // nullopt: deleted
  std::optional<T> predicted;
  Outcome outcome;
  bool correct_diagnosis = false;  // meaningful for true rejections only
};

struct MddCounts {
  std::size_t ta = 0, fr = 0, fa = 0, tr = 0, cd = 0, de = 0;
  std::size_t edits = 0;             // S + D + I of predicted vs annotated
  std::size_t reference_phones = 0;  // annotated length

  MddCounts& operator+=(const MddCounts& o) {
    ta += o.ta, fr += o.fr, fa += o.fa, tr += o.tr, cd += o.cd, de += o.de;
    edits += o.edits, reference_phones += o.reference_phones;
    return *this;
  }
  friend bool operator==(const MddCounts&, const MddCounts&) = default;
};

// Rates are nullopt whenever their denominator is zero.
struct MddReport {
  MddCounts counts;
  std::optional<double> frr, far, precision, recall, f1, per, der;
};

inline std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

inline MddReport make_report(const MddCounts& c) {
  MddReport r;
  r.counts = c;
  r.frr = ratio(c.fr, c.fr + c.ta);
  r.far = ratio(c.fa, c.fa + c.tr);
  r.precision = ratio(c.tr, c.fr + c.tr);
  r.recall = ratio(c.tr, c.fa + c.tr);
  if (r.precision && r.recall && *r.precision + *r.recall > 0.0) {
    r.f1 = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
  }
  r.per = ratio(c.edits, c.reference_phones);
  r.der = ratio(c.de, c.cd + c.de);
  return r;
}

// Projects `other` onto the positions of `canonical`: substituted or matched
// symbols are kept, deletions become nullopt, insertions are dropped.
template <typename T>
std::vector<std::optional<T>> project_onto(const std::vector<T>& canonical,
                                           const std::vector<T>& other) {
  std::vector<std::optional<T>> out(canonical.size());
  for (const auto& op : align(canonical, other).ops) {
    if (op.kind == EditKind::kMatch || op.kind == EditKind::kSubstitution) {
      out[static_cast<std::size_t>(op.ref_index)] = other[static_cast<std::size_t>(op.hyp_index)];
    }
  }
  return out;
}

template <typename T>
struct Classification {
  std::vector<AlignedTriple<T>> triples;
  MddCounts counts;
};

template <typename T>
Classification<T> classify(const std::vector<T>& canonical, const std::vector<T>& annotated,
                           const std::vector<T>& predicted) {
  Classification<T> out;
  const auto said = project_onto(canonical, annotated);
  const auto heard = project_onto(canonical, predicted);
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    AlignedTriple<T> tri{canonical[i], said[i], heard[i], Outcome::kTrueAcceptance};
    const bool said_ok = said[i].has_value() && *said[i] == canonical[i];
    const bool heard_ok = heard[i].has_value() && *heard[i] == canonical[i];
    if (said_ok && heard_ok) {
      tri.outcome = Outcome::kTrueAcceptance;
      ++out.counts.ta;
    } else if (said_ok) {
      tri.outcome = Outcome::kFalseRejection;
      ++out.counts.fr;
    } else if (heard_ok) {
      tri.outcome = Outcome::kFalseAcceptance;
      ++out.counts.fa;
    } else {
      tri.outcome = Outcome::kTrueRejection;
      ++out.counts.tr;
      // a missing phone equals only another missing phone
      tri.correct_diagnosis = said[i] == heard[i];
      ++(tri.correct_diagnosis ? out.counts.cd : out.counts.de);
    }
    out.triples.push_back(std::move(tri));
  }
  out.counts.edits = align(annotated, predicted).cost;
  out.counts.reference_phones = annotated.size();
  return out;
}

inline MddReport aggregate(std::span<const MddCounts> utterances) {
  if (utterances.empty()) fail(ErrorCode::kEmptyCorpus, "aggregate needs at least one utterance");
  MddCounts total;
  for (const auto& c : utterances) total += c;
  return make_report(total);
}

inline nlohmann::json to_json(const MddReport& r) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  const auto& c = r.counts;
  return {{"ta", c.ta},
          {"fr", c.fr},
          {"fa", c.fa},
          {"tr", c.tr},
          {"cd", c.cd},
          {"de", c.de},
          {"edits", c.edits},
          {"reference_phones", c.reference_phones},
          {"frr", opt(r.frr)},
          {"far", opt(r.far)},
          {"precision", opt(r.precision)},
          {"recall", opt(r.recall)},
          {"f1", opt(r.f1)},
          {"per", opt(r.per)},
          {"der", opt(r.der)}};
}

inline const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::kTrueAcceptance: return "TA";
    case Outcome::kFalseRejection: return "FR";
    case Outcome::kFalseAcceptance: return "FA";
    case Outcome::kTrueRejection: return "TR";
  }
  return "?";
}

}  // namespace tonemdd::eval

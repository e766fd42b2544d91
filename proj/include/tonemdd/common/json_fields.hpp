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

// Strict JSON field readers shared by the configuration types.

#pragma once

#include <string>

#include <json.hpp>

#include "tonemdd/common/error.hpp"

namespace tonemdd {

// Rejects keys of `j` that `defaults` does not carry; `what` prefixes errors.
inline void reject_unknown_keys(const nlohmann::json& j, const nlohmann::json& defaults,
                                const std::string& what) {
  if (!j.is_object()) fail(ErrorCode::kConfig, what + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) fail(ErrorCode::kConfig, what + "." + key + ": unknown field");
  }
}

// Reads j[key] into out when present. Integers must be JSON integers.
template <typename T>
void read_field(const nlohmann::json& j, const std::string& key, T& out,
                const std::string& what) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
    if (!v.is_number_integer()) fail(ErrorCode::kConfig, what + "." + key + ": expected an integer");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) fail(ErrorCode::kConfig, what + "." + key + ": expected a number");
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) fail(ErrorCode::kConfig, what + "." + key + ": expected a boolean");
  }
  try {
    out = v.get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, what + "." + key + ": " + e.what());
  }
}

}  // namespace tonemdd

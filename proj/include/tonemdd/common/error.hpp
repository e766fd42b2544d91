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

#include <stdexcept>
#include <string>
#include <string_view>

namespace tonemdd {

// Machine-parsable error categories. The CLI prints `error: <code>: <msg>`.
enum class ErrorCode {
  kInvalidArgument,
  kAudioFormat,
  kAudioTooShort,
  kUnsupportedHop,
  kDegenerateStats,
  kEmptyCorpus,
  kParse,
  kOutOfVocabulary,
  kShapeMismatch,
  kMisalignment,
  kConfig,
  kIo,
  kDivergence,
  kOracleLimit,
  kGradCheck,
  kUsage,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "E_INVALID_ARGUMENT";
    case ErrorCode::kAudioFormat: return "E_AUDIO_FORMAT";
    case ErrorCode::kAudioTooShort: return "E_AUDIO_TOO_SHORT";
    case ErrorCode::kUnsupportedHop: return "E_UNSUPPORTED_HOP";
    case ErrorCode::kDegenerateStats: return "E_DEGENERATE_STATS";
    case ErrorCode::kEmptyCorpus: return "E_EMPTY_CORPUS";
    case ErrorCode::kParse: return "E_PARSE";
    case ErrorCode::kOutOfVocabulary: return "E_OOV";
    case ErrorCode::kShapeMismatch: return "E_SHAPE";
    case ErrorCode::kMisalignment: return "E_MISALIGNMENT";
    case ErrorCode::kConfig: return "E_CONFIG";
    case ErrorCode::kIo: return "E_IO";
    case ErrorCode::kDivergence: return "E_DIVERGENCE";
    case ErrorCode::kOracleLimit: return "E_ORACLE_LIMIT";
    case ErrorCode::kGradCheck: return "E_GRADCHECK";
    case ErrorCode::kUsage: return "E_USAGE";
  }
  return "E_UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace tonemdd

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

// Checkpoint container: <dir>/index.json maps tensor names to shape, dtype
// and byte offset into <dir>/params.bin, a little-endian float64 blob.

#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tonemdd/autodiff/tensor.hpp"

namespace tonemdd::ad {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written in native little-endian order");

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

inline constexpr const char* kCheckpointIndex = "index.json";
inline constexpr const char* kCheckpointBlob = "params.bin";

inline void save_checkpoint(const std::filesystem::path& dir, const NamedTensors& tensors) {
  std::filesystem::create_directories(dir);
  nlohmann::json index;
  index["format"] = "tonemdd-checkpoint-v1";
  index["blob"] = kCheckpointBlob;
  nlohmann::json entries = nlohmann::json::object();
  std::ofstream blob(dir / kCheckpointBlob, std::ios::binary);
  if (!blob) fail(ErrorCode::kIo, "cannot write " + (dir / kCheckpointBlob).string());
  std::size_t offset = 0;
  for (const auto& [name, t] : tensors) {
    if (entries.contains(name)) fail(ErrorCode::kConfig, "duplicate tensor name " + name);
    entries[name] = {{"shape", t.shape()}, {"dtype", "float64"}, {"offset", offset}};
    const auto bytes = t.numel() * sizeof(double);
    blob.write(reinterpret_cast<const char*>(t.raw()), static_cast<std::streamsize>(bytes));
    offset += bytes;
  }
  index["tensors"] = entries;
  if (!blob) fail(ErrorCode::kIo, "short write to checkpoint blob");
  std::ofstream idx(dir / kCheckpointIndex);
  idx << index.dump(2) << '\n';
  if (!idx) fail(ErrorCode::kIo, "cannot write " + (dir / kCheckpointIndex).string());
}

inline std::map<std::string, Tensor> load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream idx(dir / kCheckpointIndex);
  if (!idx) fail(ErrorCode::kIo, "missing checkpoint index in " + dir.string());
  nlohmann::json index;
  try {
    idx >> index;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("bad checkpoint index: ") + e.what());
  }
  std::ifstream blob(dir / index.value("blob", std::string(kCheckpointBlob)), std::ios::binary);
  if (!blob) fail(ErrorCode::kIo, "missing checkpoint blob in " + dir.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(blob)), std::istreambuf_iterator<char>());
  std::map<std::string, Tensor> out;
  for (const auto& [name, e] : index.at("tensors").items()) {
    if (e.at("dtype") != "float64") fail(ErrorCode::kParse, "unsupported dtype for " + name);
    auto shape = e.at("shape").get<Shape>();
    auto offset = e.at("offset").get<std::size_t>();
    const auto n = numel_of(shape);
    if (offset + n * sizeof(double) > bytes.size()) {
      fail(ErrorCode::kParse, "checkpoint blob too short for " + name);
    }
    std::vector<double> values(n);
    std::memcpy(values.data(), bytes.data() + offset, n * sizeof(double));
    out.emplace(name, Tensor(std::move(shape), std::move(values)));
  }
  return out;
}

// Copies checkpoint values into existing tensors, by name.
inline void restore_checkpoint(const std::filesystem::path& dir, NamedTensors& targets) {
  auto loaded = load_checkpoint(dir);
  for (auto& [name, t] : targets) {
    auto it = loaded.find(name);
    if (it == loaded.end()) fail(ErrorCode::kConfig, "checkpoint lacks tensor '" + name + "'");
    if (it->second.shape() != t.shape()) {
      fail(ErrorCode::kConfig, "checkpoint tensor '" + name + "' has shape " +
                                   shape_str(it->second.shape()) + ", model expects " +
                                   shape_str(t.shape()));
    }
    std::copy(it->second.data().begin(), it->second.data().end(), t.mutable_data().begin());
  }
}

}  // namespace tonemdd::ad

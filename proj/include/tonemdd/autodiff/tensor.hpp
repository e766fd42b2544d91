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

// Dense double tensors and the reverse-mode tape that records operations
// on them.

#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tonemdd/common/error.hpp"

namespace tonemdd::ad {

using Shape = std::vector<std::size_t>;

inline std::size_t numel_of(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < s.size(); ++i) out << (i ? "x" : "") << s[i];
  out << ']';
  return out.str();
}

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

// Shared handle to a node. Copies alias the same storage; use clone() for a
// deep copy.
class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false)
      : node_(std::make_shared<Node>()) {
    if (numel_of(shape) != data.size()) {
      fail(ErrorCode::kShapeMismatch, "tensor shape " + shape_str(shape) +
                                          " does not match " +
                                          std::to_string(data.size()) + " values");
    }
    node_->shape = std::move(shape);
    node_->value = std::move(data);
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<double> data(numel_of(shape), 0.0);
    return Tensor(std::move(shape), std::move(data), requires_grad);
  }

  static Tensor scalar(double v) { return Tensor({}, {v}); }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const double> data() const { return node_->value; }
  std::span<double> mutable_data() { return node_->value; }
  const double* raw() const { return node_->value.data(); }

  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

  double item() const {
    if (numel() != 1) {
      fail(ErrorCode::kShapeMismatch, "item() on tensor of shape " + shape_str(shape()));
    }
    return node_->value[0];
  }
  double at(std::size_t r, std::size_t c) const {
    return node_->value[r * node_->shape.at(1) + c];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }

  Tensor clone() const {
    Tensor t(shape(), node_->value, requires_grad());
    return t;
  }

  // Same values, no gradient history.
  Tensor detach() const { return Tensor(shape(), node_->value, false); }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Ordered record of executed operations. backward() replays the recorded
// gradient rules in strict reverse order; gradients accumulate additively.
class Tape {
 public:
  void push(std::function<void()> rule) { records_.push_back(std::move(rule)); }

  void backward(const Tensor& root, double seed = 1.0) {
    if (root.numel() != 1) {
      fail(ErrorCode::kShapeMismatch,
           "backward() needs a scalar root, got " + shape_str(root.shape()));
    }
    root.node()->ensure_grad();
    root.node()->grad[0] += seed;
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) (*it)();
  }

  void clear() { records_.clear(); }
  std::size_t size() const { return records_.size(); }

 private:
  std::vector<std::function<void()>> records_;
};

inline Tape*& active_tape_slot() {
  thread_local Tape* tape = nullptr;
  return tape;
}

inline Tape* active_tape() { return active_tape_slot(); }

// Makes `tape` the recording target for operations on this thread.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape) : previous_(active_tape_slot()) {
    active_tape_slot() = &tape;
  }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;
  ~TapeScope() { active_tape_slot() = previous_; }

 private:
  Tape* previous_;
};

// Suspends recording, e.g. for inference or finite differences.
class NoGradScope {
 public:
  NoGradScope() : previous_(active_tape_slot()) { active_tape_slot() = nullptr; }
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;
  ~NoGradScope() { active_tape_slot() = previous_; }

 private:
  Tape* previous_;
};

}  // namespace tonemdd::ad

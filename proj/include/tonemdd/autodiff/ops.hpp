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

// Differentiable primitives. Every op computes its forward value eagerly and,
// when a tape is active and some input requires a gradient, records the
// matching backward rule.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tonemdd/autodiff/tensor.hpp"

namespace tonemdd::ad {

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

inline bool tracking(std::initializer_list<const Tensor*> inputs) {
  if (active_tape() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t != nullptr && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

inline Tensor result(Shape shape, std::vector<double> value, bool track,
                     [[maybe_unused]] const char* op) {
  return Tensor(std::move(shape), std::move(value), track);
}

// Gradient buffer of `n` if it participates, else nullptr.
inline double* grad_of(const std::shared_ptr<Node>& n) {
  if (!n || !n->requires_grad) return nullptr;
  n->ensure_grad();
  return n->grad.data();
}

inline bool has_upstream(const std::shared_ptr<Node>& out) {
  return out->grad.size() == out->value.size();
}

[[noreturn]] inline void shape_error(const std::string& op, const Tensor& a,
                                     const Tensor& b) {
  fail(ErrorCode::kShapeMismatch,
       op + ": incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
}

inline void require_rank2(const std::string& op, const Tensor& x) {
  if (x.rank() != 2) {
    fail(ErrorCode::kShapeMismatch, op + ": expected a matrix, got " + shape_str(x.shape()));
  }
}

}  // namespace detail

// Registers a custom op: `backward(out_node)` must accumulate into the
// gradients of the captured inputs.
inline Tensor custom_op(Shape shape, std::vector<double> value,
                        std::initializer_list<const Tensor*> inputs,
                        std::function<void(const std::shared_ptr<Node>&)> backward) {
  const bool track = detail::tracking(inputs);
  Tensor out = detail::result(std::move(shape), std::move(value), track, "custom");
  if (track) {
    auto on = out.node();
    active_tape()->push([on, backward = std::move(backward)] {
      if (detail::has_upstream(on)) backward(on);
    });
  }
  return out;
}

// [m x k] . [k x n]
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  using namespace detail;
  require_rank2("matmul", a);
  require_rank2("matmul", b);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) shape_error("matmul", a, b);
  std::vector<double> c(m * n);
  MapMat(c.data(), m, n).noalias() =
      ConstMapMat(a.raw(), m, k) * ConstMapMat(b.raw(), k, n);
  const bool track = tracking({&a, &b});
  Tensor out = result({m, n}, std::move(c), track, "matmul");
  if (track) {
    active_tape()->push([an = a.node(), bn = b.node(), on = out.node(), m, k, n] {
      if (!has_upstream(on)) return;
      ConstMapMat dc(on->grad.data(), m, n);
      if (double* ga = grad_of(an)) {
        MapMat(ga, m, k).noalias() += dc * ConstMapMat(bn->value.data(), k, n).transpose();
      }
      if (double* gb = grad_of(bn)) {
        MapMat(gb, k, n).noalias() += ConstMapMat(an->value.data(), m, k).transpose() * dc;
      }
    });
  }
  return out;
}

// [m x k] . [n x k]^T
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  using namespace detail;
  require_rank2("matmul_nt", a);
  require_rank2("matmul_nt", b);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) shape_error("matmul_nt", a, b);
  std::vector<double> c(m * n);
  MapMat(c.data(), m, n).noalias() =
      ConstMapMat(a.raw(), m, k) * ConstMapMat(b.raw(), n, k).transpose();
  const bool track = tracking({&a, &b});
  Tensor out = result({m, n}, std::move(c), track, "matmul_nt");
  if (track) {
    active_tape()->push([an = a.node(), bn = b.node(), on = out.node(), m, k, n] {
      if (!has_upstream(on)) return;
      ConstMapMat dc(on->grad.data(), m, n);
      if (double* ga = grad_of(an)) {
        MapMat(ga, m, k).noalias() += dc * ConstMapMat(bn->value.data(), n, k);
      }
      if (double* gb = grad_of(bn)) {
        MapMat(gb, n, k).noalias() += dc.transpose() * ConstMapMat(an->value.data(), m, k);
      }
    });
  }
  return out;
}

// Elementwise sum. `b` may also be a vector broadcast over the rows of `a`.
inline Tensor add(const Tensor& a, const Tensor& b) {
  using namespace detail;
  const bool same = a.shape() == b.shape();
  const bool row_bcast = !same && a.rank() == 2 && b.rank() == 1 && b.dim(0) == a.dim(1);
  if (!same && !row_bcast) shape_error("add", a, b);
  std::vector<double> c(a.data().begin(), a.data().end());
  const std::size_t nb = b.numel();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b.raw()[same ? i : i % nb];
  const bool track = tracking({&a, &b});
  Tensor out = result(a.shape(), std::move(c), track, "add");
  if (track) {
    active_tape()->push([an = a.node(), bn = b.node(), on = out.node(), same, nb] {
      if (!has_upstream(on)) return;
      const auto& g = on->grad;
      if (double* ga = grad_of(an)) {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (double* gb = grad_of(bn)) {
        for (std::size_t i = 0; i < g.size(); ++i) gb[same ? i : i % nb] += g[i];
      }
    });
  }
  return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  using namespace detail;
  if (a.shape() != b.shape()) shape_error("mul", a, b);
  std::vector<double> c(a.numel());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.raw()[i] * b.raw()[i];
  const bool track = tracking({&a, &b});
  Tensor out = result(a.shape(), std::move(c), track, "mul");
  if (track) {
    active_tape()->push([an = a.node(), bn = b.node(), on = out.node()] {
      if (!has_upstream(on)) return;
      const auto& g = on->grad;
      if (double* ga = grad_of(an)) {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bn->value[i];
      }
      if (double* gb = grad_of(bn)) {
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * an->value[i];
      }
    });
  }
  return out;
}

inline Tensor scale(const Tensor& a, double s) {
  using namespace detail;
  std::vector<double> c(a.numel());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.raw()[i] * s;
  const bool track = tracking({&a});
  Tensor out = result(a.shape(), std::move(c), track, "scale");
  if (track) {
    active_tape()->push([an = a.node(), on = out.node(), s] {
      if (!has_upstream(on)) return;
      if (double* ga = grad_of(an)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i) ga[i] += s * on->grad[i];
      }
    });
  }
  return out;
}

inline Tensor reshape(const Tensor& a, Shape shape) {
  using namespace detail;
  if (numel_of(shape) != a.numel()) {
    fail(ErrorCode::kShapeMismatch,
         "reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  std::vector<double> c(a.data().begin(), a.data().end());
  const bool track = tracking({&a});
  Tensor out = result(std::move(shape), std::move(c), track, "reshape");
  if (track) {
    active_tape()->push([an = a.node(), on = out.node()] {
      if (!has_upstream(on)) return;
      if (double* ga = grad_of(an)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i) ga[i] += on->grad[i];
      }
    });
  }
  return out;
}

// Concatenation of matrices along axis 0 (rows) or 1 (columns).
inline Tensor concat(const std::vector<Tensor>& parts, int axis) {
  using namespace detail;
  if (parts.empty()) fail(ErrorCode::kShapeMismatch, "concat: no inputs");
  if (axis != 0 && axis != 1) fail(ErrorCode::kShapeMismatch, "concat: axis must be 0 or 1");
  for (const auto& p : parts) require_rank2("concat", p);
  const std::size_t other = parts[0].dim(1 - axis);
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.dim(1 - axis) != other) shape_error("concat", parts[0], p);
    total += p.dim(axis);
  }
  const std::size_t rows = axis == 0 ? total : other;
  const std::size_t cols = axis == 0 ? other : total;
  std::vector<double> c(rows * cols);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const std::size_t pr = p.dim(0), pc = p.dim(1);
    for (std::size_t r = 0; r < pr; ++r) {
      for (std::size_t q = 0; q < pc; ++q) {
        const std::size_t dst = axis == 0 ? (off + r) * cols + q : r * cols + off + q;
        c[dst] = p.raw()[r * pc + q];
      }
    }
    off += p.dim(axis);
  }
  bool track = false;
  if (active_tape() != nullptr) {
    for (const auto& p : parts) track = track || p.requires_grad();
  }
  Tensor out = result({rows, cols}, std::move(c), track, "concat");
  if (track) {
    std::vector<std::shared_ptr<Node>> nodes;
    for (const auto& p : parts) nodes.push_back(p.node());
    active_tape()->push([nodes, offsets, on = out.node(), axis, cols] {
      if (!has_upstream(on)) return;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        double* g = grad_of(nodes[i]);
        if (g == nullptr) continue;
        const std::size_t pr = nodes[i]->shape[0], pc = nodes[i]->shape[1];
        for (std::size_t r = 0; r < pr; ++r) {
          for (std::size_t q = 0; q < pc; ++q) {
            const std::size_t src =
                axis == 0 ? (offsets[i] + r) * cols + q : r * cols + offsets[i] + q;
            g[r * pc + q] += on->grad[src];
          }
        }
      }
    });
  }
  return out;
}

// Half-open range [begin, end) of a matrix along `axis`.
inline Tensor slice(const Tensor& a, int axis, std::size_t begin, std::size_t end) {
  using namespace detail;
  require_rank2("slice", a);
  if ((axis != 0 && axis != 1) || begin > end || end > a.dim(axis)) {
    fail(ErrorCode::kShapeMismatch, "slice: range [" + std::to_string(begin) + ", " +
                                        std::to_string(end) + ") invalid for " +
                                        shape_str(a.shape()));
  }
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  const std::size_t out_rows = axis == 0 ? end - begin : rows;
  const std::size_t out_cols = axis == 0 ? cols : end - begin;
  std::vector<double> c(out_rows * out_cols);
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t q = 0; q < out_cols; ++q) {
      const std::size_t src = axis == 0 ? (begin + r) * cols + q : r * cols + begin + q;
      c[r * out_cols + q] = a.raw()[src];
    }
  }
  const bool track = tracking({&a});
  Tensor out = result({out_rows, out_cols}, std::move(c), track, "slice");
  if (track) {
    active_tape()->push([an = a.node(), on = out.node(), axis, begin, cols, out_rows,
                         out_cols] {
      if (!has_upstream(on)) return;
      double* g = grad_of(an);
      if (g == nullptr) return;
      for (std::size_t r = 0; r < out_rows; ++r) {
        for (std::size_t q = 0; q < out_cols; ++q) {
          const std::size_t dst = axis == 0 ? (begin + r) * cols + q : r * cols + begin + q;
          g[dst] += on->grad[r * out_cols + q];
        }
      }
    });
  }
  return out;
}

// Rows of `table` [V x D] selected by `ids`.
inline Tensor embedding_lookup(const Tensor& table, std::span<const int> ids) {
  using namespace detail;
  require_rank2("embedding_lookup", table);
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  std::vector<int> idx(ids.begin(), ids.end());
  std::vector<double> c(idx.size() * d);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= vocab) {
      fail(ErrorCode::kOutOfVocabulary, "embedding_lookup: index " + std::to_string(idx[i]) +
                                            " outside [0, " + std::to_string(vocab) + ")");
    }
    std::copy_n(table.raw() + static_cast<std::size_t>(idx[i]) * d, d, c.begin() + i * d);
  }
  const bool track = tracking({&table});
  Tensor out = result({idx.size(), d}, std::move(c), track, "embedding_lookup");
  if (track) {
    active_tape()->push([tn = table.node(), on = out.node(), idx = std::move(idx), d] {
      if (!has_upstream(on)) return;
      double* g = grad_of(tn);
      if (g == nullptr) return;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        double* row = g + static_cast<std::size_t>(idx[i]) * d;
        for (std::size_t j = 0; j < d; ++j) row[j] += on->grad[i * d + j];
      }
    });
  }
  return out;
}

inline std::size_t conv1d_output_length(std::size_t in_len, std::size_t kernel,
                                        std::size_t stride, std::size_t padding) {
  if (in_len + 2 * padding < kernel) return 0;
  return (in_len + 2 * padding - kernel) / stride + 1;
}

// Time-major 1-D convolution. x: [T x Cin], weight: [K x Cin x Cout],
// bias: [Cout] or undefined. Output: [T_out x Cout].
inline Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias,
                     std::size_t stride, std::size_t padding) {
  using namespace detail;
  require_rank2("conv1d", x);
  if (weight.rank() != 3 || weight.dim(1) != x.dim(1)) shape_error("conv1d", x, weight);
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != weight.dim(2))) {
    shape_error("conv1d", weight, bias);
  }
  if (stride == 0) fail(ErrorCode::kShapeMismatch, "conv1d: stride must be positive");
  const std::size_t t_in = x.dim(0), cin = x.dim(1);
  const std::size_t k = weight.dim(0), cout = weight.dim(2);
  const std::size_t t_out = conv1d_output_length(t_in, k, stride, padding);
  if (t_out == 0) {
    fail(ErrorCode::kShapeMismatch, "conv1d: input " + shape_str(x.shape()) +
                                        " shorter than kernel " + std::to_string(k));
  }
  const std::size_t width = k * cin;
  std::vector<double> col(t_out * width, 0.0);
  for (std::size_t o = 0; o < t_out; ++o) {
    for (std::size_t j = 0; j < k; ++j) {
      const auto src = static_cast<std::ptrdiff_t>(o * stride + j) -
                       static_cast<std::ptrdiff_t>(padding);
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_in)) continue;
      std::copy_n(x.raw() + static_cast<std::size_t>(src) * cin, cin,
                  col.begin() + o * width + j * cin);
    }
  }
  std::vector<double> y(t_out * cout);
  MapMat ym(y.data(), t_out, cout);
  ym.noalias() = ConstMapMat(col.data(), t_out, width) * ConstMapMat(weight.raw(), width, cout);
  if (bias.defined()) {
    for (std::size_t o = 0; o < t_out; ++o) {
      for (std::size_t c = 0; c < cout; ++c) y[o * cout + c] += bias.raw()[c];
    }
  }
  const bool track = tracking({&x, &weight, &bias});
  Tensor out = result({t_out, cout}, std::move(y), track, "conv1d");
  if (track) {
    active_tape()->push([xn = x.node(), wn = weight.node(),
                         bn = bias.defined() ? bias.node() : nullptr, on = out.node(),
                         col = std::move(col), t_in, cin, k, cout, t_out, width, stride,
                         padding] {
      if (!has_upstream(on)) return;
      ConstMapMat dy(on->grad.data(), t_out, cout);
      if (double* gw = grad_of(wn)) {
        MapMat(gw, width, cout).noalias() += ConstMapMat(col.data(), t_out, width).transpose() * dy;
      }
      if (double* gb = grad_of(bn)) {
        for (std::size_t o = 0; o < t_out; ++o) {
          for (std::size_t c = 0; c < cout; ++c) gb[c] += on->grad[o * cout + c];
        }
      }
      if (double* gx = grad_of(xn)) {
        RowMat dcol = dy * ConstMapMat(wn->value.data(), width, cout).transpose();
        for (std::size_t o = 0; o < t_out; ++o) {
          for (std::size_t j = 0; j < k; ++j) {
            const auto src = static_cast<std::ptrdiff_t>(o * stride + j) -
                             static_cast<std::ptrdiff_t>(padding);
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_in)) continue;
            double* dst = gx + static_cast<std::size_t>(src) * cin;
            for (std::size_t c = 0; c < cin; ++c) dst[c] += dcol(o, j * cin + c);
          }
        }
      }
    });
  }
  return out;
}

inline constexpr double kNormEpsilon = 1e-5;

namespace detail {

// Normalizes groups of entries of a [T x C] matrix. `group_of(c)` gives the
// group of channel c; a group spans all rows when `per_row` is false and a
// single row otherwise. gamma/beta are optional per-channel affine terms.
inline Tensor normalize(const std::string& op, const Tensor& x, std::size_t groups,
                        bool per_row, const Tensor& gamma, const Tensor& beta,
                        double eps) {
  require_rank2(op, x);
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (gamma.defined() && (gamma.rank() != 1 || gamma.dim(0) != cols)) shape_error(op, x, gamma);
  if (beta.defined() && (beta.rank() != 1 || beta.dim(0) != cols)) shape_error(op, x, beta);
  const std::size_t per_group = cols / groups;
  // Statistic sets: per_row -> rows sets of all columns; else groups sets.
  const std::size_t n_sets = per_row ? rows : groups;
  auto set_of = [=](std::size_t r, std::size_t c) {
    return per_row ? r : c / per_group;
  };
  std::vector<double> mean(n_sets, 0.0), var(n_sets, 0.0);
  const double count = per_row ? static_cast<double>(cols)
                               : static_cast<double>(rows * per_group);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) mean[set_of(r, c)] += x.raw()[r * cols + c];
  }
  for (double& m : mean) m /= count;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double d = x.raw()[r * cols + c] - mean[set_of(r, c)];
      var[set_of(r, c)] += d * d;
    }
  }
  std::vector<double> inv_std(n_sets);
  for (std::size_t s = 0; s < n_sets; ++s) inv_std[s] = 1.0 / std::sqrt(var[s] / count + eps);
  std::vector<double> xhat(rows * cols), y(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t i = r * cols + c, s = set_of(r, c);
      xhat[i] = (x.raw()[i] - mean[s]) * inv_std[s];
      y[i] = xhat[i] * (gamma.defined() ? gamma.raw()[c] : 1.0) +
             (beta.defined() ? beta.raw()[c] : 0.0);
    }
  }
  const bool track = tracking({&x, &gamma, &beta});
  Tensor out = result({rows, cols}, std::move(y), track, op.c_str());
  if (track) {
    active_tape()->push([xn = x.node(), gn = gamma.defined() ? gamma.node() : nullptr,
                         bn = beta.defined() ? beta.node() : nullptr, on = out.node(),
                         xhat = std::move(xhat), inv_std = std::move(inv_std), rows, cols,
                         n_sets, count, set_of] {
      if (!has_upstream(on)) return;
      const auto& dy = on->grad;
      if (double* gg = grad_of(gn)) {
        for (std::size_t i = 0; i < dy.size(); ++i) gg[i % cols] += dy[i] * xhat[i];
      }
      if (double* gb = grad_of(bn)) {
        for (std::size_t i = 0; i < dy.size(); ++i) gb[i % cols] += dy[i];
      }
      double* gx = grad_of(xn);
      if (gx == nullptr) return;
      std::vector<double> dxhat(dy.size());
      for (std::size_t i = 0; i < dy.size(); ++i) {
        dxhat[i] = dy[i] * (gn ? gn->value[i % cols] : 1.0);
      }
      std::vector<double> sum_d(n_sets, 0.0), sum_dx(n_sets, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          const std::size_t i = r * cols + c, s = set_of(r, c);
          sum_d[s] += dxhat[i];
          sum_dx[s] += dxhat[i] * xhat[i];
        }
      }
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          const std::size_t i = r * cols + c, s = set_of(r, c);
          gx[i] += inv_std[s] / count * (count * dxhat[i] - sum_d[s] - xhat[i] * sum_dx[s]);
        }
      }
    });
  }
  return out;
}

}  // namespace detail

// Group normalization of x [T x C]: statistics over all T rows and the C/G
// channels of each group.
inline Tensor group_norm(const Tensor& x, std::size_t groups, const Tensor& gamma = {},
                         const Tensor& beta = {}, double eps = kNormEpsilon) {
  detail::require_rank2("group_norm", x);
  if (groups == 0 || x.dim(1) % groups != 0) {
    fail(ErrorCode::kShapeMismatch, "group_norm: " + std::to_string(groups) +
                                        " groups do not divide " + std::to_string(x.dim(1)) +
                                        " channels");
  }
  return detail::normalize("group_norm", x, groups, false, gamma, beta, eps);
}

// Per-row normalization of x [T x C].
inline Tensor layer_norm(const Tensor& x, const Tensor& gamma = {}, const Tensor& beta = {},
                         double eps = kNormEpsilon) {
  detail::require_rank2("layer_norm", x);
  return detail::normalize("layer_norm", x, 1, true, gamma, beta, eps);
}

namespace detail {

// Visits the lanes of a matrix along `axis`: calls fn(offset, stride, len).
template <typename Fn>
void for_each_lane(const Shape& shape, int axis, Fn&& fn) {
  const std::size_t rows = shape[0], cols = shape[1];
  if (axis == 1) {
    for (std::size_t r = 0; r < rows; ++r) fn(r * cols, std::size_t{1}, cols);
  } else {
    for (std::size_t c = 0; c < cols; ++c) fn(c, cols, rows);
  }
}

inline Shape as_matrix(const Tensor& a, int axis, const std::string& op) {
  if (a.rank() == 1) return {1, a.dim(0)};
  require_rank2(op, a);
  if (axis != 0 && axis != 1) fail(ErrorCode::kShapeMismatch, op + ": axis must be 0 or 1");
  return a.shape();
}

}  // namespace detail

inline Tensor softmax(const Tensor& a, int axis = 1) {
  using namespace detail;
  const Shape m = as_matrix(a, axis, "softmax");
  if (a.rank() == 1) axis = 1;
  std::vector<double> y(a.numel());
  for_each_lane(m, axis, [&](std::size_t off, std::size_t st, std::size_t len) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, a.raw()[off + i * st]);
    double z = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      y[off + i * st] = std::exp(a.raw()[off + i * st] - mx);
      z += y[off + i * st];
    }
    for (std::size_t i = 0; i < len; ++i) y[off + i * st] /= z;
  });
  const bool track = tracking({&a});
  Tensor out = result(a.shape(), std::move(y), track, "softmax");
  if (track) {
    active_tape()->push([an = a.node(), on = out.node(), m, axis] {
      if (!has_upstream(on)) return;
      double* g = grad_of(an);
      if (g == nullptr) return;
      const auto& y = on->value;
      const auto& dy = on->grad;
      for_each_lane(m, axis, [&](std::size_t off, std::size_t st, std::size_t len) {
        double dot = 0.0;
        for (std::size_t i = 0; i < len; ++i) dot += dy[off + i * st] * y[off + i * st];
        for (std::size_t i = 0; i < len; ++i) {
          g[off + i * st] += y[off + i * st] * (dy[off + i * st] - dot);
        }
      });
    });
  }
  return out;
}

inline Tensor log_softmax(const Tensor& a, int axis = 1) {
  using namespace detail;
  const Shape m = as_matrix(a, axis, "log_softmax");
  if (a.rank() == 1) axis = 1;
  std::vector<double> y(a.numel());
  for_each_lane(m, axis, [&](std::size_t off, std::size_t st, std::size_t len) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, a.raw()[off + i * st]);
    double z = 0.0;
    for (std::size_t i = 0; i < len; ++i) z += std::exp(a.raw()[off + i * st] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t i = 0; i < len; ++i) y[off + i * st] = a.raw()[off + i * st] - lse;
  });
  const bool track = tracking({&a});
  Tensor out = result(a.shape(), std::move(y), track, "log_softmax");
  if (track) {
    active_tape()->push([an = a.node(), on = out.node(), m, axis] {
      if (!has_upstream(on)) return;
      double* g = grad_of(an);
      if (g == nullptr) return;
      const auto& y = on->value;
      const auto& dy = on->grad;
      for_each_lane(m, axis, [&](std::size_t off, std::size_t st, std::size_t len) {
        double total = 0.0;
        for (std::size_t i = 0; i < len; ++i) total += dy[off + i * st];
        for (std::size_t i = 0; i < len; ++i) {
          g[off + i * st] += dy[off + i * st] - std::exp(y[off + i * st]) * total;
        }
      });
    });
  }
  return out;
}

inline Tensor tanh(const Tensor& a) {
  using namespace detail;
  std::vector<double> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(a.raw()[i]);
  const bool track = tracking({&a});
  Tensor out = result(a.shape(), std::move(y), track, "tanh");
  if (track) {
    active_tape()->push([an = a.node(), on = out.node()] {
      if (!has_upstream(on)) return;
      double* g = grad_of(an);
      if (g == nullptr) return;
      for (std::size_t i = 0; i < on->grad.size(); ++i) {
        g[i] += on->grad[i] * (1.0 - on->value[i] * on->value[i]);
      }
    });
  }
  return out;
}

// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// x * tanh(softplus(x))
inline Tensor mish(const Tensor& a) {
  using namespace detail;
  std::vector<double> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double x = a.raw()[i];
    y[i] = x * std::tanh(softplus(x));
  }
  const bool track = tracking({&a});
  Tensor out = result(a.shape(), std::move(y), track, "mish");
  if (track) {
    active_tape()->push([an = a.node(), on = out.node()] {
      if (!has_upstream(on)) return;
      double* g = grad_of(an);
      if (g == nullptr) return;
      for (std::size_t i = 0; i < on->grad.size(); ++i) {
        const double x = an->value[i];
        const double t = std::tanh(softplus(x));
        g[i] += on->grad[i] * (t + x * (1.0 - t * t) * sigmoid(x));
      }
    });
  }
  return out;
}

inline Tensor sum(const Tensor& a) {
  using namespace detail;
  double s = 0.0;
  for (double v : a.data()) s += v;
  const bool track = tracking({&a});
  Tensor out = result({}, {s}, track, "sum");
  if (track) {
    active_tape()->push([an = a.node(), on = out.node()] {
      if (!has_upstream(on)) return;
      double* g = grad_of(an);
      if (g == nullptr) return;
      for (std::size_t i = 0; i < an->value.size(); ++i) g[i] += on->grad[0];
    });
  }
  return out;
}

inline Tensor mean(const Tensor& a) {
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

// Pairwise row sums: out[i * k + j] = a[i] + b[j] for a [m x n], b [k x n].
inline Tensor outer_add(const Tensor& a, const Tensor& b) {
  using namespace detail;
  require_rank2("outer_add", a);
  require_rank2("outer_add", b);
  if (a.dim(1) != b.dim(1)) shape_error("outer_add", a, b);
  const std::size_t m = a.dim(0), k = b.dim(0), n = a.dim(1);
  std::vector<double> c(m * k * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double* row = c.data() + (i * k + j) * n;
      for (std::size_t q = 0; q < n; ++q) row[q] = a.raw()[i * n + q] + b.raw()[j * n + q];
    }
  }
  const bool track = tracking({&a, &b});
  Tensor out = result({m * k, n}, std::move(c), track, "outer_add");
  if (track) {
    active_tape()->push([an = a.node(), bn = b.node(), on = out.node(), m, k, n] {
      if (!has_upstream(on)) return;
      double* ga = grad_of(an);
      double* gb = grad_of(bn);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          const double* row = on->grad.data() + (i * k + j) * n;
          for (std::size_t q = 0; q < n; ++q) {
            if (ga) ga[i * n + q] += row[q];
            if (gb) gb[j * n + q] += row[q];
          }
        }
      }
    });
  }
  return out;
}

}  // namespace tonemdd::ad

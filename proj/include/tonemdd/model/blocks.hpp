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

// Network blocks: acoustic frontend, subsampler, pitch fusion block, pitch
// encoder, stateless decoder and joint network.

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "tonemdd/model/layers.hpp"

namespace tonemdd::model {

// Log-mel [T10 x n_mels] -> [T20 x d]: strided conv then a same-length conv.
struct AcousticFrontend {
  Conv1d down;
  Conv1d refine;

  static AcousticFrontend make(ParameterStore& s, std::size_t n_mels, std::size_t d) {
    return {Conv1d::make(s, "frontend.conv1", 3, n_mels, d, 2, 1),
            Conv1d::make(s, "frontend.conv2", 3, d, d, 1, 1)};
  }

  Tensor operator()(const Tensor& log_mel) const {
    if (log_mel.rank() != 2 || log_mel.dim(0) == 0) {
      fail(ErrorCode::kShapeMismatch, "frontend needs [T x n_mels] features with T >= 1");
    }
    return ad::tanh(refine(ad::tanh(down(log_mel))));
  }
};

inline std::size_t frontend_length(std::size_t t10) { return (t10 + 1) / 2; }
inline std::size_t subsampled_length(std::size_t t20) { return (t20 + 1) / 2; }

// Frame-pair concatenation: [T20 x d] -> [ceil(T20/2) x d_out].
struct Subsampler {
  Linear proj;

  static Subsampler make(ParameterStore& s, std::size_t d_in, std::size_t d_out) {
    return {Linear::make(s, "subsample.proj", 2 * d_in, d_out)};
  }

  Tensor operator()(const Tensor& x) const {
    const std::size_t t = x.dim(0), d = x.dim(1);
    Tensor even = x;
    if (t % 2 == 1) even = ad::concat({x, ad::slice(x, 0, t - 1, t)}, 0);
    return ad::tanh(proj(ad::reshape(even, {(t + 1) / 2, 2 * d})));
  }
};

// Global multi-head self-attention plus a residual convolution stack,
// summed and layer-normalized.
struct PitchFusionBlock {
  Linear q, k, v, o;
  std::vector<Conv1d> local;  // empty in global-only mode
  Affine norm;
  std::size_t heads = 1;
  bool has_local = true;

  static PitchFusionBlock make(ParameterStore& s, const std::string& name, std::size_t dim,
                               std::size_t heads, std::size_t local_units, bool with_local) {
    if (heads == 0 || dim % heads != 0) {
      fail(ErrorCode::kConfig, "fusion_dim must be divisible by n_heads");
    }
    PitchFusionBlock b;
    b.q = Linear::make(s, name + ".attn.q", dim, dim);
    b.k = Linear::make(s, name + ".attn.k", dim, dim);
    b.v = Linear::make(s, name + ".attn.v", dim, dim);
    b.o = Linear::make(s, name + ".attn.o", dim, dim);
    if (with_local) {
      for (std::size_t u = 0; u < local_units; ++u) {
        b.local.push_back(
            Conv1d::make(s, name + ".local" + std::to_string(u), 3, dim, dim, 1, 1));
      }
    }
    b.norm = Affine::make(s, name + ".norm", dim);
    b.heads = heads;
    b.has_local = with_local;
    return b;
  }

  // Per-head softmax attention weights [T x T].
  std::vector<Tensor> attention_weights(const Tensor& x) const {
    const Tensor qx = q(x), kx = k(x);
    const std::size_t dh = qx.dim(1) / heads;
    std::vector<Tensor> w;
    for (std::size_t h = 0; h < heads; ++h) {
      const Tensor qh = ad::slice(qx, 1, h * dh, (h + 1) * dh);
      const Tensor kh = ad::slice(kx, 1, h * dh, (h + 1) * dh);
      w.push_back(ad::softmax(ad::scale(ad::matmul_nt(qh, kh), 1.0 / std::sqrt(double(dh)))));
    }
    return w;
  }

  Tensor global_branch(const Tensor& x) const {
    const Tensor qx = q(x), kx = k(x), vx = v(x);
    const std::size_t dh = qx.dim(1) / heads;
    std::vector<Tensor> outs;
    for (std::size_t h = 0; h < heads; ++h) {
      const Tensor qh = ad::slice(qx, 1, h * dh, (h + 1) * dh);
      const Tensor kh = ad::slice(kx, 1, h * dh, (h + 1) * dh);
      const Tensor vh = ad::slice(vx, 1, h * dh, (h + 1) * dh);
      const Tensor a =
          ad::softmax(ad::scale(ad::matmul_nt(qh, kh), 1.0 / std::sqrt(double(dh))));
      outs.push_back(ad::matmul(a, vh));
    }
    return o(heads == 1 ? outs[0] : ad::concat(outs, 1));
  }

  Tensor local_branch(const Tensor& x) const {
    Tensor h = x;
    for (const auto& conv : local) h = ad::add(h, ad::mish(conv(h)));
    return h;
  }

  Tensor operator()(const Tensor& x, bool use_local = true) const {
    if (x.rank() != 2 || x.dim(1) != q.weight.dim(0)) {
      fail(ErrorCode::kShapeMismatch, "fusion block input " + ad::shape_str(x.shape()));
    }
    Tensor g = global_branch(x);
    if (has_local && use_local) g = ad::add(g, local_branch(x));
    return ad::layer_norm(g, norm.gamma, norm.beta);
  }
};

// conv1d(stride) -> group_norm -> mish -> optional fusion block.
struct PitchEncoderUnit {
  Conv1d conv;
  Affine norm;
  std::size_t groups = 1;
  std::vector<PitchFusionBlock> pfb;  // zero or one

  Tensor operator()(const Tensor& x, bool use_local = true) const {
    Tensor h = ad::mish(ad::group_norm(conv(x), groups, norm.gamma, norm.beta));
    return pfb.empty() ? h : pfb[0](h, use_local);
  }
};

// Embeds C context ids, concatenates, then linear + tanh.
struct StatelessDecoder {
  Embedding embed;
  Linear proj;
  std::size_t context = 2;

  static StatelessDecoder make(ParameterStore& s, std::size_t vocab, std::size_t embed_dim,
                               std::size_t context, std::size_t d_out) {
    return {Embedding::make(s, "decoder.embed", vocab, embed_dim),
            Linear::make(s, "decoder.proj", context * embed_dim, d_out), context};
  }

  // `ids` holds rows of `context` ids back to back; output [rows x d_out].
  Tensor operator()(std::span<const int> ids) const {
    if (ids.empty() || ids.size() % context != 0) {
      fail(ErrorCode::kShapeMismatch, "decoder context ids not a multiple of C");
    }
    const std::size_t rows = ids.size() / context;
    const Tensor e = embed(ids);
    return ad::tanh(proj(ad::reshape(e, {rows, context * e.dim(1)})));
  }

  // Context windows for prefixes y[0..u), u = 0..U, padded with `blank`.
  std::vector<int> prefix_contexts(std::span<const int> y, int blank) const {
    std::vector<int> ids;
    ids.reserve((y.size() + 1) * context);
    for (std::size_t u = 0; u <= y.size(); ++u) {
      for (std::size_t c = 0; c < context; ++c) {
        const auto pos = static_cast<std::ptrdiff_t>(u) - static_cast<std::ptrdiff_t>(context) +
                         static_cast<std::ptrdiff_t>(c);
        ids.push_back(pos < 0 ? blank : y[static_cast<std::size_t>(pos)]);
      }
    }
    return ids;
  }
};

struct JointNetwork {
  Linear enc_proj;
  Linear out;

  static JointNetwork make(ParameterStore& s, std::size_t d_enc, std::size_t d_joint,
                           std::size_t vocab) {
    return {Linear::make(s, "joint.enc_proj", d_enc, d_joint),
            Linear::make(s, "joint.out", d_joint, vocab)};
  }

  // enc [T x d_enc], dec [(U+1) x d_joint] -> log-probs [T*(U+1) x V].
  Tensor operator()(const Tensor& enc, const Tensor& dec) const {
    return ad::log_softmax(out(ad::tanh(ad::outer_add(enc_proj(enc), dec))));
  }
};

}  // namespace tonemdd::model

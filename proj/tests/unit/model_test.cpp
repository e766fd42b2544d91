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

#include <gtest/gtest.h>

#include "tonemdd/autodiff/grad_check.hpp"
#include "tonemdd/model/transducer.hpp"
#include "tonemdd/signal/dio.hpp"

namespace tonemdd::model {
namespace {

constexpr double kEps = 1e-4;
constexpr double kTol = 1e-4;

ModelConfig tiny_config(int hop = 40) {
  ModelConfig c;
  c.n_mels = 6;
  c.d_acoustic = 6;
  c.d_enc = 8;
  c.d_joint = 6;
  c.d_pitch_embed = 4;
  c.n_heads = 2;
  c.fusion_dim = 8;
  c.norm_groups = 2;
  c.decoder_embed = 3;
  c.vocab_size = 5;
  c.pitch_hop_ms = hop;
  c.num_pitch_encoders = hop == 10 ? 2 : 1;
  c.conv_stride = hop == 40 ? 1 : 2;
  return c;
}

Tensor random(ad::Shape shape, std::uint64_t seed, double scale = 1.0, bool grad = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(ad::numel_of(shape));
  for (auto& x : v) x = n(rng);
  return Tensor(std::move(shape), std::move(v), grad);
}

Tensor probe(const Tensor& y, std::uint64_t seed = 99) {
  return ad::sum(ad::mul(y, random(y.shape(), seed, 1.0, false)));
}

// Input for n samples at 16 kHz under the config's pitch hop.
ModelInput input_for(const ModelConfig& c, std::size_t n_samples, std::uint64_t seed) {
  ModelInput in;
  const std::size_t t10 = n_samples / 160 + 1;
  in.log_mel = random({t10, static_cast<std::size_t>(c.n_mels)}, seed, 1.0, false);
  const std::size_t tp = signal::pitch_frame_count(n_samples, 16000, c.pitch_hop_ms);
  std::mt19937_64 rng(seed + 1);
  const int vocab = std::max(c.pitch_vocab(), 2);
  for (std::size_t i = 0; i < tp; ++i) {
    const bool voiced = rng() % 4 != 0;
    in.pitch_ids.push_back(voiced ? 1 + static_cast<int>(rng() % (vocab - 1)) : 0);
    in.pitch_values.push_back(voiced ? 0.1 + 0.3 * double(rng() % 100) / 100.0 : 0.0);
  }
  return in;
}

std::vector<Tensor> params_of(TransducerModel& m, const std::string& prefix) {
  std::vector<Tensor> out;
  for (auto& [name, t] : m.parameters()) {
    if (name.rfind(prefix, 0) == 0) out.push_back(t);
  }
  return out;
}

void expect_grad_ok(const std::function<Tensor()>& f, std::vector<Tensor> inputs) {
  ASSERT_FALSE(inputs.empty());
  const auto rep = ad::grad_check(f, std::move(inputs), kEps, kTol);
  EXPECT_TRUE(rep.passed) << "max rel " << rep.max_rel_error << " at " << rep.worst;
}

TEST(ConfigTest, ValidatesInvariants) {
  EXPECT_NO_THROW(ModelConfig{}.validate());
  for (int hop : {10, 20, 40}) EXPECT_NO_THROW(tiny_config(hop).validate());
  auto c = tiny_config();
  c.conv_stride = 2;
  EXPECT_THROW(c.validate(), Error);
  c = tiny_config();
  c.n_heads = 3;
  EXPECT_THROW(c.validate(), Error);
  c = tiny_config();
  c.vocab_size = 1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(ConfigTest, JsonRoundTripAndStrictKeys) {
  auto c = tiny_config(10);
  c.pitch_variant = PitchInput::kCoarse;
  c.fusion_mode = FusionMode::kLinear;
  const auto back = model_config_from_json(to_json(c));
  EXPECT_EQ(first_divergent_field(c, back), "");
  auto j = to_json(c);
  j["bogus"] = 1;
  try {
    model_config_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
  auto other = c;
  other.d_joint = 7;
  EXPECT_EQ(first_divergent_field(c, other), "d_joint");
  EXPECT_THROW(model_config_from_json(nlohmann::json{{"fusion_mode", "concat"}}), Error);
  EXPECT_THROW(model_config_from_json(nlohmann::json{{"d_enc", "big"}}), Error);
}

TEST(ShapeTest, FrontendAndSubsampleLengthLaws) {
  EXPECT_EQ(frontend_length(101), 51u);
  EXPECT_EQ(subsampled_length(51), 26u);
  EXPECT_EQ(subsampled_length(1), 1u);
  TransducerModel m(tiny_config(), 1);
  const Tensor out = m.acoustic(random({101, 6}, 2, 1.0, false));
  EXPECT_EQ(out.dim(0), 26u);
  EXPECT_EQ(out.dim(1), 8u);
  for (double v : out.data()) EXPECT_LT(std::abs(v), 1.0);
  EXPECT_EQ(m.subsample(random({1, 6}, 3, 1.0, false)).dim(0), 1u);
}

TEST(ShapeTest, PitchPathMatchesAcousticLengthForAllHops) {
  for (int hop : {10, 20, 40}) {
    auto cfg = tiny_config(hop);
    TransducerModel m(cfg, 3);
    for (std::size_t n = 3200; n <= 48000; n += 800) {
      const std::size_t t40 = subsampled_length(frontend_length(n / 160 + 1));
      std::size_t len = signal::pitch_frame_count(n, 16000, hop);
      for (int u = 0; u < cfg.num_pitch_encoders; ++u) {
        len = ad::conv1d_output_length(len, 3, static_cast<std::size_t>(cfg.conv_stride), 1);
      }
      EXPECT_EQ(len, t40) << "hop " << hop << " n " << n;
    }
    const auto in = input_for(cfg, 16000, 4);
    EXPECT_EQ(m.encode(in).dim(0), 26u);
  }
}

TEST(ShapeTest, MisalignedPitchIsRejected) {
  auto cfg = tiny_config(40);
  TransducerModel m(cfg, 5);
  auto in = input_for(cfg, 16000, 6);
  in.pitch_ids.push_back(1);  // off by one: tolerated
  EXPECT_EQ(m.encode(in).dim(0), 26u);
  in.pitch_ids.resize(20);
  try {
    m.encode(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMisalignment);
    EXPECT_NE(std::string(e.what()).find("pitch/acoustic misalignment"), std::string::npos);
  }
  in = input_for(cfg, 16000, 6);
  in.pitch_ids[3] = cfg.pitch_vocab();
  EXPECT_THROW(m.encode(in), Error);
}

TEST(ShapeTest, OutputShapesInAllModes) {
  for (auto variant : {PitchInput::kNone, PitchInput::kRaw, PitchInput::kRawNoEmbed,
                       PitchInput::kMel, PitchInput::kCoarse}) {
    for (auto mode : {FusionMode::kPfb, FusionMode::kPfbGlobalOnly, FusionMode::kLinear}) {
      auto cfg = tiny_config(20);
      cfg.pitch_variant = variant;
      cfg.fusion_mode = mode;
      TransducerModel m(cfg, 7);
      const auto in = input_for(cfg, 8000, 8);
      const Tensor enc = m.encode(in);
      EXPECT_EQ(enc.dim(0), 13u);
      EXPECT_EQ(enc.dim(1), 8u);
      const std::vector<int> y{1, 3};
      const Tensor lat = m.lattice(enc, y);
      EXPECT_EQ(lat.dim(0), 13u * 3u);
      EXPECT_EQ(lat.dim(1), 5u);
      double mass = 0.0;
      for (std::size_t k = 0; k < 5; ++k) mass += std::exp(lat.at(0, k));
      EXPECT_NEAR(mass, 1.0, 1e-12);
    }
  }
}

TEST(BehaviorTest, NoPitchIsIdentityFusion) {
  auto cfg = tiny_config();
  cfg.pitch_variant = PitchInput::kNone;
  TransducerModel m(cfg, 9);
  const auto in = input_for(cfg, 8000, 10);
  const Tensor a = m.acoustic(in.log_mel);
  const Tensor e = m.encode(in);
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), e.data().begin()));
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), m.fuse(a, Tensor{}).data().begin()));
}

TEST(BehaviorTest, ZeroPitchTableMakesOutputIndependentOfPitch) {
  auto cfg = tiny_config();
  TransducerModel m(cfg, 11);
  std::fill(m.pitch_embed.table.mutable_data().begin(), m.pitch_embed.table.mutable_data().end(),
            0.0);
  auto in = input_for(cfg, 8000, 12);
  const Tensor e1 = m.encode(in);
  for (auto& id : in.pitch_ids) id = (id * 7 + 3) % cfg.pitch_vocab();
  const Tensor e2 = m.encode(in);
  for (std::size_t i = 0; i < e1.numel(); ++i) EXPECT_NEAR(e1.data()[i], e2.data()[i], 1e-12);
}

TEST(BehaviorTest, LocalBranchDisabledEqualsGlobalOnlyModel) {
  auto full_cfg = tiny_config(10);
  auto global_cfg = full_cfg;
  global_cfg.fusion_mode = FusionMode::kPfbGlobalOnly;
  TransducerModel full(full_cfg, 13), global(global_cfg, 14);
  // Copy every shared parameter by name.
  for (auto& [name, t] : global.parameters()) {
    for (const auto& [fname, ft] : full.parameters()) {
      if (fname == name) std::copy(ft.data().begin(), ft.data().end(), t.mutable_data().begin());
    }
  }
  const auto in = input_for(full_cfg, 12000, 15);
  full.set_local_branch(false);
  const Tensor a = full.encode(in), b = global.encode(in);
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_EQ(a.data()[i], b.data()[i]);
  full.set_local_branch(true);
  const Tensor c = full.encode(in);
  EXPECT_NE(c.data()[0], a.data()[0]);
}

TEST(BehaviorTest, PfbLengthAndPermutationProbe) {
  ParameterStore s(16);
  const auto pfb = PitchFusionBlock::make(s, "pfb", 8, 2, 2, true);
  for (std::size_t t : {1u, 7u, 26u}) EXPECT_EQ(pfb(random({t, 8}, t, 1.0, false)).dim(0), t);
  const Tensor x = random({3, 8}, 17, 1.0, false);
  const std::vector<std::size_t> perm{2, 0, 1};
  std::vector<double> pv;
  for (std::size_t r : perm) {
    for (std::size_t c = 0; c < 8; ++c) pv.push_back(x.at(r, c));
  }
  const Tensor xp({3, 8}, pv);
  const auto w = pfb.attention_weights(x), wp = pfb.attention_weights(xp);
  for (std::size_t h = 0; h < w.size(); ++h) {
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_NEAR(wp[h].at(i, j), w[h].at(perm[i], perm[j]), 1e-12);
      }
    }
  }
  const Tensor l = pfb.local_branch(x), lp = pfb.local_branch(xp);
  double diff = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t c = 0; c < 8; ++c) diff += std::abs(lp.at(i, c) - l.at(perm[i], c));
  }
  EXPECT_GT(diff, 1e-6);
}

TEST(BehaviorTest, DecoderIsStateless) {
  TransducerModel m(tiny_config(), 18);
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> h1, h2;
    for (auto k = rng() % 5; k > 0; --k) h1.push_back(1 + static_cast<int>(rng() % 4));
    for (auto k = rng() % 5; k > 0; --k) h2.push_back(1 + static_cast<int>(rng() % 4));
    const std::vector<int> tail{1 + static_cast<int>(rng() % 4), 1 + static_cast<int>(rng() % 4)};
    h1.insert(h1.end(), tail.begin(), tail.end());
    h2.insert(h2.end(), tail.begin(), tail.end());
    const auto c1 = m.decoder.prefix_contexts(h1, 0), c2 = m.decoder.prefix_contexts(h2, 0);
    const Tensor d1 = m.decoder(std::span(c1).last(2)), d2 = m.decoder(std::span(c2).last(2));
    EXPECT_TRUE(std::equal(d1.data().begin(), d1.data().end(), d2.data().begin()));
  }
  const auto start = m.decoder.prefix_contexts(std::vector<int>{}, 0);
  EXPECT_EQ(start, (std::vector<int>{0, 0}));
  const std::vector<int> bad{0, 9};
  EXPECT_THROW(m.decoder(bad), Error);
}

TEST(BehaviorTest, GreedyDecodeIsDeterministicAndBounded) {
  auto cfg = tiny_config();
  TransducerModel m(cfg, 20);
  const auto in = input_for(cfg, 16000, 21);
  const auto a = m.greedy_decode(in, 3), b = m.greedy_decode(in, 3);
  EXPECT_EQ(a, b);
  EXPECT_LE(a.size(), 26u * 3u);
  for (int id : a) EXPECT_GT(id, 0);
  EXPECT_THROW(m.greedy_decode(in, 0), Error);
  // Forcing the blank bias high gives an empty hypothesis.
  m.joint.out.bias.mutable_data()[0] = 1e6;
  EXPECT_TRUE(m.greedy_decode(in).empty());
}

TEST(BehaviorTest, GreedyMatchesLatticeArgmaxOnFirstStep) {
  auto cfg = tiny_config();
  TransducerModel m(cfg, 22);
  const auto in = input_for(cfg, 4000, 23);
  ad::NoGradScope ng;
  const Tensor lat = m.lattice(m.encode(in), std::vector<int>{});
  std::size_t best = 0;
  for (std::size_t k = 1; k < 5; ++k) {
    if (lat.at(0, k) > lat.at(0, best)) best = k;
  }
  const auto hyp = m.greedy_decode(in);
  if (best == 0) {
    EXPECT_TRUE(hyp.empty() || lat.dim(0) > 1);
  } else {
    ASSERT_FALSE(hyp.empty());
    EXPECT_EQ(hyp[0], static_cast<int>(best));
  }
}

TEST(BlockGradTest, Frontend) {
  TransducerModel m(tiny_config(), 30);
  Tensor x = random({9, 6}, 31);
  auto ps = params_of(m, "frontend.");
  ps.push_back(x);
  expect_grad_ok([&] { return probe(m.frontend(x)); }, ps);
}

TEST(BlockGradTest, SubsampleOddAndEven) {
  TransducerModel m(tiny_config(), 32);
  for (std::size_t t : {4u, 5u}) {
    Tensor x = random({t, 6}, 33 + t);
    auto ps = params_of(m, "subsample.");
    ps.push_back(x);
    expect_grad_ok([&] { return probe(m.subsample(x)); }, ps);
  }
}

TEST(BlockGradTest, PitchEmbeddingAndLift) {
  auto cfg = tiny_config();
  TransducerModel m(cfg, 34);
  const auto in = input_for(cfg, 4000, 35);
  expect_grad_ok([&] { return probe(m.embed_pitch(in)); }, params_of(m, "pitch.embed"));
  cfg.pitch_variant = PitchInput::kRawNoEmbed;
  TransducerModel lift(cfg, 36);
  expect_grad_ok([&] { return probe(lift.embed_pitch(in)); }, params_of(lift, "pitch.lift"));
}

TEST(BlockGradTest, FusionBlockBothModes) {
  ParameterStore s(37);
  const auto full = PitchFusionBlock::make(s, "full", 8, 2, 2, true);
  const auto global = PitchFusionBlock::make(s, "global", 8, 2, 2, false);
  Tensor x = random({5, 8}, 38);
  std::vector<Tensor> fp{x}, gp{x};
  for (auto& [name, t] : s.all()) (name.rfind("full", 0) == 0 ? fp : gp).push_back(t);
  expect_grad_ok([&] { return probe(full(x)); }, fp);
  expect_grad_ok([&] { return probe(global(x)); }, gp);
}

TEST(BlockGradTest, PitchEncoderUnits) {
  for (int hop : {10, 40}) {
    auto cfg = tiny_config(hop);
    TransducerModel m(cfg, 39);
    Tensor e = random({11, 4}, 40);
    auto ps = params_of(m, "pitch.unit");
    ps.push_back(e);
    expect_grad_ok(
        [&] {
          Tensor h = e;
          for (const auto& u : m.pitch_units) h = u(h);
          return probe(h);
        },
        ps);
  }
}

TEST(BlockGradTest, FuseBothModes) {
  for (auto mode : {FusionMode::kPfb, FusionMode::kLinear}) {
    auto cfg = tiny_config();
    cfg.fusion_mode = mode;
    TransducerModel m(cfg, 41);
    Tensor a = random({4, 8}, 42), p = random({4, 8}, 43);
    auto ps = params_of(m, "fuse.");
    ps.push_back(a);
    ps.push_back(p);
    expect_grad_ok([&] { return probe(m.fuse(a, p)); }, ps);
  }
}

TEST(BlockGradTest, DecoderAndJoint) {
  TransducerModel m(tiny_config(), 44);
  const std::vector<int> y{2, 4, 1};
  const auto ctx = m.decoder.prefix_contexts(y, 0);
  expect_grad_ok([&] { return probe(m.decoder(ctx)); }, params_of(m, "decoder."));
  Tensor enc = random({3, 8}, 45), dec = random({4, 6}, 46, 0.5);
  auto ps = params_of(m, "joint.");
  ps.push_back(enc);
  ps.push_back(dec);
  expect_grad_ok([&] { return probe(m.joint(enc, dec)); }, ps);
}

TEST(BlockGradTest, FullModelLoss) {
  auto cfg = tiny_config(20);
  TransducerModel m(cfg, 47);
  const auto in = input_for(cfg, 3200, 48);
  const std::vector<int> y{1, 2, 3};
  std::vector<Tensor> ps;
  for (auto& [name, t] : m.parameters()) ps.push_back(t);
  const auto rep = ad::grad_check([&] { return m.loss(in, y); }, ps, kEps, kTol, 12, 49);
  EXPECT_TRUE(rep.passed) << rep.max_rel_error << " at " << rep.worst;
}

TEST(ModelTest, FrontendMaskAndDeterministicInit) {
  TransducerModel a(tiny_config(), 50), b(tiny_config(), 50);
  const auto mask = a.frontend_mask();
  ASSERT_EQ(mask.size(), a.parameters().size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    EXPECT_EQ(mask[i], a.parameters()[i].first.rfind("frontend.", 0) == 0);
    const auto& ta = a.parameters()[i].second;
    const auto& tb = b.parameters()[i].second;
    EXPECT_TRUE(std::equal(ta.data().begin(), ta.data().end(), tb.data().begin()));
  }
}

}  // namespace
}  // namespace tonemdd::model

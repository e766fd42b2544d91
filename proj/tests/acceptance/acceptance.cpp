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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tonemdd/tonemdd.hpp"

namespace fs = std::filesystem;
using namespace tonemdd;
using namespace tonemdd::pipeline;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

model::ModelConfig small_dims(model::ModelConfig c, int d, int embed) {
  c.d_acoustic = d;
  c.d_enc = d;
  c.fusion_dim = d;
  c.d_joint = d;
  c.d_pitch_embed = embed;
  c.decoder_embed = embed;
  return c;
}

void set_hop(model::ModelConfig& c, int hop) {
  c.pitch_hop_ms = hop;
  c.num_pitch_encoders = hop == 10 ? 2 : 1;
  c.conv_stride = hop == 40 ? 1 : 2;
}

// Criterion 1: transducer loss against exhaustive path enumeration.
Outcome loss_vs_brute_force() {
  Clock clock;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(0.0, 2.0);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t T = 1 + rng() % 5, U = rng() % 4, V = 2 + rng() % 3;
    rnnt::LogLattice lat{T, U, V, 0, std::vector<double>(T * (U + 1) * V)};
    for (std::size_t r = 0; r < T * (U + 1); ++r) {
      double* row = lat.log_probs.data() + r * V;
      double hi = -1e300;
      for (std::size_t k = 0; k < V; ++k) hi = std::max(hi, row[k] = n(rng));
      double s = 0.0;
      for (std::size_t k = 0; k < V; ++k) s += std::exp(row[k] - hi);
      for (std::size_t k = 0; k < V; ++k) row[k] -= hi + std::log(s);
    }
    std::vector<int> y(U);
    for (auto& l : y) l = 1 + static_cast<int>(rng() % (V - 1));
    const double diff = rnnt::rnnt_loss(lat, y).loss - rnnt::brute_force_loss(lat, y);
    worst = std::max(worst, std::abs(diff));
  }
  const double secs = clock.seconds();
  return {worst < 1e-9 && secs < 10.0,
          "200 instances, max |diff| " + fmt(worst) + ", " + fmt(secs, 3) + " s"};
}

// Criterion 2: finite-difference checks of primitives and every block.
Outcome gradient_checks() {
  Clock clock;
  GradCheckOptions o;  // eps 1e-4, tol 1e-4, all coordinates
  std::size_t checks = 0, failed = 0;
  double worst = 0.0;
  std::string worst_name;
  const auto tally = [&](const std::string& tag, const std::vector<NamedGradCheck>& list) {
    for (const auto& c : list) {
      ++checks;
      if (!c.report.passed) {
        ++failed;
        spdlog::error("gradcheck failed: {} {} rel {} at {}", tag, c.name, c.report.max_rel_error,
                      c.report.worst);
      }
      if (c.report.max_rel_error > worst) {
        worst = c.report.max_rel_error;
        worst_name = tag + c.name;
      }
    }
  };
  tally("", gradcheck_primitives(o));

  auto base = small_dims(toy_model_config(SynthSpec{}), 16, 8);
  base.n_heads = 2;
  base.norm_groups = 4;
  base.n_mels = 6;
  base.envelope_ceps = 0;
  std::set<std::string> seen;
  const auto run = [&](model::ModelConfig c) {
    const std::string tag = model::to_string(c.pitch_variant) + "/" +
                            model::to_string(c.fusion_mode) + "/" +
                            std::to_string(c.pitch_hop_ms) + ":";
    if (!seen.insert(tag).second) return;
    tally(tag, gradcheck_blocks(c, o));
  };
  for (int hop : {10, 20, 40}) {
    for (auto mode : {model::FusionMode::kPfb, model::FusionMode::kPfbGlobalOnly,
                      model::FusionMode::kLinear}) {
      auto c = base;
      set_hop(c, hop);
      c.fusion_mode = mode;
      run(c);
    }
  }
  for (auto v : {model::PitchInput::kNone, model::PitchInput::kRawNoEmbed,
                 model::PitchInput::kMel, model::PitchInput::kCoarse}) {
    auto c = base;
    c.pitch_variant = v;
    run(c);
  }
  const double secs = clock.seconds();
  return {failed == 0 && secs < 120.0,
          std::to_string(checks) + " checks, " + std::to_string(failed) + " failed, max rel err " +
              fmt(worst) + " (" + worst_name + "), " + fmt(secs, 3) + " s"};
}

signal::Waveform tone(double hz, std::size_t n) {
  signal::Waveform w;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = 0.5 * std::sin(2.0 * std::numbers::pi * hz * i / signal::kModelSampleRate);
  }
  return w;
}

// Criterion 3: pitch path length equals acoustic length, no padding or
// truncation, for every hop and duration.
Outcome length_alignment() {
  std::size_t cases = 0, bad = 0;
  std::string first_bad;
  for (int hop : {10, 20, 40}) {
    auto cfg = small_dims(toy_model_config(SynthSpec{}), 16, 8);
    cfg.n_heads = 2;
    cfg.norm_groups = 4;
    set_hop(cfg, hop);
    const model::TransducerModel m(cfg, 1);
    for (int ms = 200; ms <= 3000; ms += 50) {
      ++cases;
      const std::size_t n = static_cast<std::size_t>(ms) * 16;
      const auto w = tone(180.0, n);
      Analyzed a;
      a.utt_id = "probe";
      a.log_mel = normalized_log_mel(w, cfg.n_mels, cfg.envelope_ceps, cfg.mel_fmin);
      a.pitch = extract_pitch(w, cfg);
      const auto stats = pitch_stats({a}, cfg);
      const auto in = model_input(a, cfg, stats);
      const std::size_t acoustic = m.acoustic(in.log_mel).dim(0);
      ad::Tensor h = m.embed_pitch(in);
      for (const auto& unit : m.pitch_units) h = unit(h);
      if (h.dim(0) != acoustic || m.encode(in).dim(0) != acoustic) {
        ++bad;
        if (first_bad.empty()) {
          first_bad = "hop " + std::to_string(hop) + " " + std::to_string(ms) + " ms: pitch " +
                      std::to_string(h.dim(0)) + " vs acoustic " + std::to_string(acoustic);
        }
      }
    }
  }
  return {bad == 0, std::to_string(cases) + " cases, " + std::to_string(bad) + " mismatched" +
                        (first_bad.empty() ? "" : " (" + first_bad + ")")};
}

// Criterion 4: pitch accuracy on pure tones and a chirp.
Outcome pitch_accuracy() {
  double worst_fraction = 2.0;
  double worst_hz = 0.0;
  for (double hz = 100.0; hz <= 600.0; hz += 25.0) {
    const auto track = signal::estimate_f0(tone(hz, 16000), 10);
    std::size_t interior = 0, good = 0;
    for (std::size_t i = 5; i + 5 < track.size(); ++i) {
      ++interior;
      if (track.voiced[i] && std::abs(track.f0_hz[i] - hz) <= 0.03 * hz) ++good;
    }
    const double f = static_cast<double>(good) / static_cast<double>(interior);
    if (f < worst_fraction) {
      worst_fraction = f;
      worst_hz = hz;
    }
  }
  const double f0 = 150.0, f1 = 300.0, dur = 2.0;
  signal::Waveform w;
  w.samples.resize(static_cast<std::size_t>(dur * signal::kModelSampleRate));
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double t = static_cast<double>(i) / signal::kModelSampleRate;
    w.samples[i] =
        0.5 * std::sin(2.0 * std::numbers::pi * (f0 * t + 0.5 * (f1 - f0) / dur * t * t));
  }
  const auto track = signal::estimate_f0(w, 10);
  std::size_t interior = 0, good = 0;
  for (std::size_t i = 5; i + 5 < track.size(); ++i) {
    const double truth = f0 + (f1 - f0) * (static_cast<double>(i) * 0.01) / dur;
    ++interior;
    if (track.voiced[i] && std::abs(track.f0_hz[i] - truth) <= 0.05 * truth) ++good;
  }
  const double chirp = static_cast<double>(good) / static_cast<double>(interior);
  return {worst_fraction >= 0.9 && chirp >= 0.9,
          "tones: worst " + fmt(100.0 * worst_fraction) + "% of interior frames within 3% (at " +
              fmt(worst_hz) + " Hz); chirp: " + fmt(100.0 * chirp) + "% within 5%"};
}

// Criterion 5: the frozen evaluation fixture.
Outcome metric_fixture() {
  const auto records = eval::read_eval_manifest(TONEMDD_FIXTURE_DIR "/mdd_fixture.jsonl");
  std::ifstream in(TONEMDD_FIXTURE_DIR "/mdd_fixture_expected.json");
  const auto expected = nlohmann::json::parse(in);
  const auto score = eval::score_corpus(records);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto want = expected.at("utterances").at(records[i].utt_id);
    const auto& c = score.utterances[i];
    const std::vector<std::pair<const char*, std::size_t>> got = {
        {"ta", c.ta}, {"fr", c.fr}, {"fa", c.fa}, {"tr", c.tr},
        {"cd", c.cd}, {"de", c.de}, {"edits", c.edits}, {"reference_phones", c.reference_phones}};
    for (const auto& [key, value] : got) mismatches += want.at(key).get<std::size_t>() != value;
  }
  const auto got = eval::to_json(score.report);
  for (const auto& [key, value] : expected.at("report").items()) {
    mismatches += got.at(key) != value;
  }
  return {records.size() == 10 && mismatches == 0,
          std::to_string(records.size()) + " utterances, " + std::to_string(mismatches) +
              " mismatched fields"};
}

// Criterion 6: a small model overfits eight utterances.
Outcome overfit(const fs::path& work) {
  Clock clock;
  SynthSpec spec;
  spec.n_train = 8;
  spec.n_dev = 1;
  spec.n_eval = 1;
  const auto data = datagen(spec, work / "data");
  const auto inv = spec.inventory();
  auto mcfg = toy_model_config(spec);
  TrainConfig tcfg;
  tcfg.batch_size = 1;
  tcfg.max_epochs = 200;
  tcfg.patience = 0;
  int epochs = 0;
  double per = 1.0;
  train_model(mcfg, tcfg, data.train, data.train, inv, {}, [&](const EpochStats& s) {
    epochs = s.epoch;
    per = s.dev_per;
    return s.dev_per > 0.0 && clock.seconds() < 600.0;
  });
  const double secs = clock.seconds();
  return {per == 0.0 && secs < 600.0, "PER " + fmt(per) + " after " + std::to_string(epochs) +
                                          " epochs, " + fmt(secs, 3) + " s"};
}

// Criterion 7: pitch fusion lowers tone substitutions; full PFB is no worse
// than global-only.
Outcome pitch_benefit(const fs::path& work) {
  Clock clock;
  SynthSpec spec;
  const auto data = datagen(spec, work / "data");
  const auto inv = spec.inventory();
  const auto base = small_dims(toy_model_config(spec), 64, 32);
  TrainConfig tcfg;
  tcfg.max_epochs = 60;
  tcfg.patience = 8;

  const auto dev_score = [&](model::ModelConfig m, std::uint64_t seed) {
    auto t = tcfg;
    t.seed = seed;
    const auto tm = train_model(m, t, data.train, data.dev, inv);
    signal::CorpusPitchStats st;
    if (tm.stats) st = *tm.stats;
    const auto preds = decode_manifest(tm.model, inv, st, data.dev, t.max_symbols_per_frame);
    return eval::score_corpus(join_for_eval(data.dev, preds, inv));
  };

  std::vector<double> none_rate, raw_rate;
  int full_wins = 0;
  std::ostringstream os;
  for (std::uint64_t seed : {1, 2, 3}) {
    auto none = base;
    none.pitch_variant = model::PitchInput::kNone;
    auto full = base;
    full.pitch_variant = model::PitchInput::kRaw;
    full.fusion_mode = model::FusionMode::kPfb;
    auto global = full;
    global.fusion_mode = model::FusionMode::kPfbGlobalOnly;
    const auto s_none = dev_score(none, seed);
    const auto s_full = dev_score(full, seed);
    const auto s_global = dev_score(global, seed);
    none_rate.push_back(s_none.tone_substitution_rate.value_or(0.0));
    raw_rate.push_back(s_full.tone_substitution_rate.value_or(0.0));
    const double per_full = s_full.report.per.value_or(1.0);
    const double per_global = s_global.report.per.value_or(1.0);
    full_wins += per_full <= per_global;
    std::ostringstream line;
    line << " seed " << seed << ": tone-sub none " << fmt(none_rate.back()) << " raw "
         << fmt(raw_rate.back()) << ", PER full " << fmt(per_full) << " global "
         << fmt(per_global) << ";";
    spdlog::info("criterion 7{}", line.str());
    os << line.str();
  }
  const double m_none = median(none_rate), m_raw = median(raw_rate);
  const bool tone_ok = m_none > 0.0 && m_raw <= 0.8 * m_none;
  const double secs = clock.seconds();
  return {tone_ok && full_wins >= 2 && secs < 3600.0,
          "median tone-sub none " + fmt(m_none) + " raw+pfb " + fmt(m_raw) + ", full<=global in " +
              std::to_string(full_wins) + "/3 seeds, " + fmt(secs, 4) + " s;" + os.str()};
}

int run_cli(const std::vector<std::string>& args, const fs::path& log) {
  std::string cmd = TONEMDD_CLI;
  for (const auto& a : args) cmd += " '" + a + "'";
  cmd += " >'" + log.string() + "' 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Criterion 8: two full pipeline runs through the command-line tool.
Outcome reproducibility(const fs::path& work) {
  const std::vector<std::string> overrides = {
      "--synth.n_train=100",       "--synth.n_dev=20",        "--synth.n_eval=40",
      "--model.d_acoustic=64",     "--model.d_enc=64",        "--model.fusion_dim=64",
      "--model.d_joint=64",        "--model.d_pitch_embed=32", "--model.decoder_embed=32",
      "--train.max_epochs=15",     "--train.seed=5"};
  std::string preds[2], reports[2];
  for (int r = 0; r < 2; ++r) {
    const fs::path dir = work / ("run" + std::to_string(r));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto step = [&](const std::string& name, std::vector<std::string> args) {
      args.insert(args.begin(), name);
      args.insert(args.end(), overrides.begin(), overrides.end());
      if (run_cli(args, dir / (name + ".log")) != 0) {
        fail(ErrorCode::kInvalidArgument,
             name + " failed, see " + (dir / (name + ".log")).string());
      }
    };
    step("datagen", {"--out", (dir / "data").string()});
    step("train", {"--train", (dir / "data/train.jsonl").string(), "--dev",
                   (dir / "data/dev.jsonl").string(), "--out", (dir / "model").string()});
    step("decode", {"--checkpoint", (dir / "model/best").string(), "--manifest",
                    (dir / "data/eval.jsonl").string(), "--out", (dir / "hyp.jsonl").string()});
    step("evaluate", {"--manifest", (dir / "data/eval.jsonl").string(), "--predictions",
                      (dir / "hyp.jsonl").string(), "--out", (dir / "report.json").string()});
    preds[r] = slurp(dir / "hyp.jsonl");
    reports[r] = slurp(dir / "report.json");
  }
  const bool same = !preds[0].empty() && !reports[0].empty() && preds[0] == preds[1] &&
                    reports[0] == reports[1];
  const auto per = nlohmann::json::parse(reports[0]).at("per");
  return {same, "eval PER " + per.dump() + ", predictions " +
                    (preds[0] == preds[1] ? "identical" : "differ") + " (" +
                    std::to_string(preds[0].size()) + " bytes), report " +
                    (reports[0] == reports[1] ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tonemdd acceptance checks"};
  std::string workdir = "acceptance_work";
  std::vector<int> only;
  app.add_option("--workdir", workdir, "scratch directory");
  app.add_option("--only", only, "criteria to run (default: all)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("TONEMDD_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(lvl));
  }
  const fs::path work = fs::absolute(workdir);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"transducer loss matches brute force", loss_vs_brute_force},
      {"finite-difference gradient checks", gradient_checks},
      {"pitch/acoustic length alignment", length_alignment},
      {"pitch accuracy on tones and chirp", pitch_accuracy},
      {"metric fixture reproduced exactly", metric_fixture},
      {"overfit eight utterances", [&] { return overfit(work / "overfit"); }},
      {"pitch fusion lowers tone substitutions", [&] { return pitch_benefit(work / "pitch"); }},
      {"pipeline is reproducible", [&] { return reproducibility(work / "repro"); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.passed;
    std::printf("%s criterion %d: %s: %s\n", o.passed ? "PASS" : "FAIL", id,
                criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

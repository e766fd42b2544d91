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

// tonemdd command-line interface.
//
//   tonemdd <subcommand> [--config FILE] [options] [--section.key=value ...]
//
// Failures print one line `error: <CODE>: <message>` to stderr and exit
// non-zero. TONEMDD_LOG_LEVEL selects the log level.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "tonemdd/tonemdd.hpp"

namespace fs = std::filesystem;
using namespace tonemdd;
using namespace tonemdd::pipeline;

namespace {

constexpr const char* kLogEnv = "TONEMDD_LOG_LEVEL";

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("tonemdd");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] [%l] %v");
  const char* env = std::getenv(kLogEnv);
  if (env == nullptr || *env == '\0') {
    spdlog::set_level(spdlog::level::info);
    return;
  }
  const auto level = spdlog::level::from_str(env);
  if (level == spdlog::level::off && std::string(env) != "off") {
    fail(ErrorCode::kConfig, std::string(kLogEnv) + ": unknown level '" + env + "'");
  }
  spdlog::set_level(level);
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

struct Common {
  std::string config;
  std::vector<std::string> overrides;

  PipelineConfig load() const {
    return load_pipeline_config(config.empty() ? std::nullopt : std::optional<fs::path>(config),
                                overrides);
  }
  bool has_model_settings() const {
    if (!config.empty()) return true;
    for (const auto& o : overrides) {
      if (o.rfind("model.", 0) == 0) return true;
    }
    return false;
  }
};

// Unparsed `--key=value` arguments become config overrides.
void collect_overrides(CLI::App& sub, Common& common) {
  for (const auto& extra : sub.remaining()) {
    if (extra.rfind("--", 0) != 0 || extra.find('=') == std::string::npos) {
      fail(ErrorCode::kUsage, "unexpected argument '" + extra + "'");
    }
    common.overrides.push_back(extra.substr(2));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "short write to " + path.string());
}

void ensure_parent(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + path.parent_path().string());
}

int run_datagen(const PipelineConfig& cfg, const std::string& out) {
  const auto r = datagen(cfg.synth, out);
  std::cout << nlohmann::json{{"out_dir", out},
                              {"train", r.train.size()},
                              {"dev", r.dev.size()},
                              {"eval", r.eval.size()}}
                   .dump()
            << '\n';
  return 0;
}

int run_extract_pitch(const PipelineConfig& cfg, const std::string& manifest,
                      const std::string& wav, const std::string& out) {
  if (manifest.empty() == wav.empty()) {
    fail(ErrorCode::kUsage, "extract-pitch needs exactly one of --manifest or --wav");
  }
  std::vector<std::pair<std::string, fs::path>> inputs;
  if (!wav.empty()) {
    inputs.emplace_back(fs::path(wav).stem().string(), wav);
  } else {
    for (const auto& u : read_manifest(manifest)) inputs.emplace_back(u.utt_id, u.audio);
  }
  ensure_parent(out);
  std::ofstream os(out);
  if (!os) fail(ErrorCode::kIo, "cannot write " + out);
  for (const auto& [id, path] : inputs) {
    const auto track = extract_pitch(signal::read_wav(path), cfg.model);
    os << signal::to_json(track, id).dump() << '\n';
  }
  if (!os) fail(ErrorCode::kIo, "short write to " + out);
  spdlog::info("extract-pitch: {} tracks at {} ms", inputs.size(), cfg.model.pitch_hop_ms);
  return 0;
}

int run_train(const PipelineConfig& cfg, const std::string& train, const std::string& dev,
              const std::string& inventory, const std::string& out) {
  const auto inv = inventory.empty() ? inventory_beside(train) : lexicon::Inventory::load(inventory);
  const auto tm = train_model(cfg.model, cfg.train, read_manifest(train), read_manifest(dev), inv,
                              fs::path(out));
  std::cout << nlohmann::json{{"checkpoint", (fs::path(out) / "best").string()},
                              {"best_epoch", tm.result.best_epoch},
                              {"best_dev_loss", tm.result.best_dev_loss},
                              {"epochs", tm.result.history.size()},
                              {"steps", tm.result.steps}}
                   .dump()
            << '\n';
  return 0;
}

int run_decode(const Common& common, const PipelineConfig& cfg, const std::string& checkpoint,
               const std::string& manifest, const std::string& out) {
  std::optional<model::ModelConfig> expected;
  if (common.has_model_settings()) expected = cfg.model;
  auto loaded = load_model(checkpoint, expected);
  const auto preds = decode_manifest(loaded.model, loaded.inventory, loaded.stats,
                                     read_manifest(manifest),
                                     static_cast<std::size_t>(cfg.train.max_symbols_per_frame));
  ensure_parent(out);
  write_predictions(out, preds);
  spdlog::info("decode: {} utterances -> {}", preds.size(), out);
  return 0;
}

int run_evaluate(const std::string& manifest, const std::string& predictions,
                 const std::string& eval_manifest, const std::string& inventory,
                 const std::string& out, const std::string& tsv, const std::string& write_eval) {
  std::vector<eval::EvalRecord> records;
  if (!eval_manifest.empty()) {
    if (!manifest.empty() || !predictions.empty()) {
      fail(ErrorCode::kUsage, "use either --eval-manifest or --manifest with --predictions");
    }
    records = eval::read_eval_manifest(eval_manifest);
  } else {
    if (manifest.empty() || predictions.empty()) {
      fail(ErrorCode::kUsage, "evaluate needs --manifest and --predictions, or --eval-manifest");
    }
    const auto inv =
        inventory.empty() ? inventory_beside(manifest) : lexicon::Inventory::load(inventory);
    records = join_for_eval(read_manifest(manifest), read_predictions(predictions), inv);
  }
  if (records.empty()) fail(ErrorCode::kEmptyCorpus, "nothing to evaluate");
  const auto score = eval::score_corpus(records);
  const std::string report = eval::to_json(score).dump(2) + "\n";
  if (!out.empty()) write_text(out, report);
  if (!tsv.empty()) write_text(tsv, eval::per_utterance_tsv(records, score));
  if (!write_eval.empty()) {
    ensure_parent(write_eval);
    write_eval_manifest(write_eval, records);
  }
  std::cout << report;
  return 0;
}

int run_gradcheck(const PipelineConfig& cfg, const std::string& out) {
  auto checks = gradcheck_primitives(cfg.gradcheck);
  const auto blocks = gradcheck_blocks(cfg.model, cfg.gradcheck);
  checks.insert(checks.end(), blocks.begin(), blocks.end());
  const auto report = to_json(checks);
  if (!out.empty()) write_text(out, report.dump(2) + "\n");
  std::cout << report.dump(2) << '\n';
  if (!report.at("passed").get<bool>()) {
    std::string failed;
    for (const auto& c : checks) {
      if (!c.report.passed) failed += (failed.empty() ? "" : ",") + c.name;
    }
    fail(ErrorCode::kGradCheck, "gradient check failed for " + failed);
  }
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Pitch-aware transducer mispronunciation detection and diagnosis"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON config file")->check(CLI::ExistingFile);
    sub->allow_extras();
  };

  std::string out, manifest, wav, train, dev, inventory, checkpoint, predictions, eval_manifest,
      tsv, write_eval;

  auto* datagen_cmd = app.add_subcommand("datagen", "Render the synthetic tonal corpus");
  add_common(datagen_cmd);
  datagen_cmd->add_option("--out", out, "Output directory")->required();

  auto* pitch_cmd = app.add_subcommand("extract-pitch", "Write DIO pitch tracks as JSON lines");
  add_common(pitch_cmd);
  pitch_cmd->add_option("--manifest", manifest, "Utterance manifest");
  pitch_cmd->add_option("--wav", wav, "Single WAV file");
  pitch_cmd->add_option("--out", out, "Output JSON-lines file")->required();

  auto* train_cmd = app.add_subcommand("train", "Train a transducer");
  add_common(train_cmd);
  train_cmd->add_option("--train", train, "Training manifest")->required();
  train_cmd->add_option("--dev", dev, "Dev manifest")->required();
  train_cmd->add_option("--inventory", inventory, "Phoneme inventory (default: beside --train)");
  train_cmd->add_option("--out", out, "Output directory")->required();

  auto* decode_cmd = app.add_subcommand("decode", "Greedy-decode a manifest");
  add_common(decode_cmd);
  decode_cmd->add_option("--checkpoint", checkpoint, "Model directory")->required();
  decode_cmd->add_option("--manifest", manifest, "Utterance manifest")->required();
  decode_cmd->add_option("--out", out, "Predictions JSON-lines file")->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions with MDD metrics");
  add_common(eval_cmd);
  eval_cmd->add_option("--manifest", manifest, "Utterance manifest");
  eval_cmd->add_option("--predictions", predictions, "Predictions JSON-lines file");
  eval_cmd->add_option("--eval-manifest", eval_manifest,
                       "Evaluation manifest with canonical/annotated/predicted");
  eval_cmd->add_option("--inventory", inventory, "Phoneme inventory (default: beside --manifest)");
  eval_cmd->add_option("--out", out, "Report JSON file");
  eval_cmd->add_option("--tsv", tsv, "Per-utterance TSV");
  eval_cmd->add_option("--write-eval-manifest", write_eval, "Write the joined evaluation manifest");

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of all blocks");
  add_common(grad_cmd);
  grad_cmd->add_option("--out", out, "Report JSON file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail(ErrorCode::kUsage, e.what());
  }

  setup_logging();
  CLI::App* sub = app.get_subcommands().front();
  collect_overrides(*sub, common);
  const auto cfg = common.load();

  if (sub == datagen_cmd) return run_datagen(cfg, out);
  if (sub == pitch_cmd) return run_extract_pitch(cfg, manifest, wav, out);
  if (sub == train_cmd) return run_train(cfg, train, dev, inventory, out);
  if (sub == decode_cmd) return run_decode(common, cfg, checkpoint, manifest, out);
  if (sub == eval_cmd) {
    return run_evaluate(manifest, predictions, eval_manifest, inventory, out, tsv, write_eval);
  }
  return run_gradcheck(cfg, out);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << error_code_name(e.code()) << ": " << one_line(e.what()) << '\n';
    return e.code() == ErrorCode::kUsage ? 2 : 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: E_PARSE: " << one_line(e.what()) << '\n';
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: E_IO: " << one_line(e.what()) << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: E_INTERNAL: " << one_line(e.what()) << '\n';
  }
  return 1;
}

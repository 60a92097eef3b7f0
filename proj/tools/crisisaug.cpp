// Copyright 2026 The crisisaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// crisisaug: command-line driver for the augmentation / training pipeline.
//
//   crisisaug <command> [--config run.json] [--out DIR] [--seed N]
//             [--manifest PATH] [--set key.path=value ...]
//
// Exit codes: 0 ok, 2 config or data error, 3 backend error, 4 numeric failure.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crisisaug/error.hpp"
#include "crisisaug/pipeline.hpp"

namespace pl = crisisaug::pipeline;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string manifest;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "Pipeline config (JSON)");
  cmd->add_option("-o,--out", c.out, "Run directory (overrides output_dir)");
  cmd->add_option("--seed", c.seed, "Global seed");
  cmd->add_option("-m,--manifest", c.manifest, "Input manifest (overrides data.manifest)");
  cmd->add_option("--set", c.sets, "Override a config value: key.path=value (repeatable)");
}

pl::PipelineConfig load_config(const Common& c) {
  pl::PipelineConfig cfg =
      c.config.empty() ? pl::PipelineConfig() : pl::PipelineConfig::from_file(c.config);
  // Flag paths are relative to the working directory, not the config file.
  const auto cwd = std::filesystem::current_path();
  if (!c.out.empty()) cfg.set_json("output_dir", std::filesystem::absolute(cwd / c.out).string());
  if (c.seed) cfg.set_json("seed", *c.seed);
  if (!c.manifest.empty()) {
    cfg.set_json("data.manifest", std::filesystem::absolute(cwd / c.manifest).string());
  }
  for (const std::string& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw crisisaug::ConfigError("--set expects key=value, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crisisaug: multimodal crisis-post augmentation and fusion training"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "crisisaug 0.1.0");

  Common common;
  std::string modality;
  std::string method;
  std::string arch;
  std::optional<std::size_t> epochs;
  std::string checkpoint;
  std::string split;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  auto* ingest = app.add_subcommand("ingest", "Validate a manifest and report its class distribution");
  auto* plan = app.add_subcommand("plan", "Plan class-targeted image augmentation");
  auto* augment = app.add_subcommand("augment", "Augment the train split (text or image)");
  auto* quality = app.add_subcommand("quality", "Score augmented texts (similarity, ROUGE-L, perplexity)");
  auto* train = app.add_subcommand("train", "Train one fusion model");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  auto* report = app.add_subcommand("report", "Build the original-vs-augmented comparison table");
  auto* train_eval = app.add_subcommand("train-eval", "Train and evaluate each configured architecture");
  for (auto* cmd : {synth, ingest, plan, augment, quality, train, eval, report, train_eval}) {
    add_common(cmd, common);
  }
  augment->add_option("--modality", modality, "text or image")
      ->required()
      ->check(CLI::IsMember({"text", "image"}));
  augment->add_option("--method", method, "Augmentation method");
  for (auto* cmd : {train, train_eval}) {
    cmd->add_option("--arch", arch, "early_fusion, multiview_cross or multiview_self_cross");
    cmd->add_option("--epochs", epochs, "Training epochs");
  }
  eval->add_option("--checkpoint", checkpoint, "Checkpoint path");
  eval->add_option("--split", split, "train, dev or test");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pl::kExitConfig;
  }

  try {
    pl::PipelineConfig cfg = load_config(common);
    std::string out;
    if (synth->parsed()) {
      out = pl::cmd_synth(cfg);
    } else if (ingest->parsed()) {
      out = pl::cmd_ingest(cfg);
    } else if (plan->parsed()) {
      out = pl::cmd_plan(cfg);
    } else if (augment->parsed()) {
      if (!method.empty()) cfg.set_json("augment." + modality + ".method", method);
      out = pl::cmd_augment(cfg, modality);
    } else if (quality->parsed()) {
      out = pl::cmd_quality(cfg);
    } else if (train->parsed() || train_eval->parsed()) {
      if (!arch.empty()) cfg.set_json("model.arch", arch);
      if (epochs) cfg.set_json("train.epochs", *epochs);
      out = train->parsed() ? pl::cmd_train(cfg) : pl::cmd_train_eval(cfg);
    } else if (eval->parsed()) {
      if (!checkpoint.empty()) {
        cfg.set_json("eval.checkpoint",
                     std::filesystem::absolute(std::filesystem::current_path() / checkpoint).string());
      }
      if (!split.empty()) cfg.set_json("eval.split", split);
      out = pl::cmd_eval(cfg);
    } else if (report->parsed()) {
      out = pl::cmd_report(cfg);
    }
    std::cout << out;
    return pl::kExitOk;
  } catch (const std::exception& e) {
    const int code = pl::exit_code_for(e);
    std::cerr << "crisisaug: error: " << e.what() << "\n";
    return code;
  }
}

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

#pragma once

// Config-driven pipeline commands. Every command writes under one run
// directory:
//
//   <out>/<command>/...          command outputs (deterministic)
//   <out>/<command>/effective_config.json
//   <out>/<command>/log.txt      progress lines, no timings
//   <out>/outputs.json           index of every file written, with sizes and hashes
//   <out>/metadata.json          wall-clock timestamps (the only nondeterministic file)

#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "crisisaug/augmentation.hpp"
#include "crisisaug/backends.hpp"
#include "crisisaug/data_model.hpp"
#include "crisisaug/fusion_models.hpp"
#include "crisisaug/training_eval.hpp"

namespace crisisaug::pipeline {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitBackend = 3,
  kExitNumeric = 4,
};

/// Maps an exception to an exit code: config/data/argument errors -> 2,
/// BackendError -> 3, NumericError -> 4, anything else -> 1.
int exit_code_for(const std::exception& e);

class PipelineConfig {
 public:
  PipelineConfig();

  /// Relative paths inside the document resolve against the file's directory.
  static PipelineConfig from_file(const std::filesystem::path& path);
  static PipelineConfig from_json(nlohmann::json doc, std::filesystem::path base_dir = ".");

  /// Overrides a dotted key ("augment.text.method"). The value is parsed as
  /// JSON when possible, otherwise stored as a string.
  void set(std::string_view dotted_key, std::string_view value);
  void set_json(std::string_view dotted_key, nlohmann::json value);

  const nlohmann::json& doc() const { return doc_; }
  /// Sub-document or an empty object.
  nlohmann::json section(std::string_view key) const;

  std::uint64_t seed() const;
  std::filesystem::path output_dir() const;
  std::filesystem::path resolve(const std::filesystem::path& p) const;
  /// The "data.manifest" path, resolved. Throws ConfigError when unset.
  std::filesystem::path manifest() const;

  /// Rejects unknown top-level keys and wrongly typed well-known fields.
  void validate() const;

 private:
  nlohmann::json doc_;
  std::filesystem::path base_;
};

/// Backends selected by the "backends" section; unset entries default to stubs.
class BackendSet {
 public:
  explicit BackendSet(const nlohmann::json& cfg);

  const TranslatorBackend& translator() const { return *translator_; }
  const ParaphraserBackend& paraphraser() const { return *paraphraser_; }
  const CaptionerBackend& captioner() const { return *captioner_; }
  const ImageGenBackend& image_gen() const { return *image_gen_; }
  const EmbedderBackend& embedder() const { return *embedder_; }
  const LmScorerBackend& lm_scorer() const { return *lm_scorer_; }
  const ImageEmbedderBackend& image_embedder() const { return *image_embedder_; }

 private:
  std::unique_ptr<TranslatorBackend> translator_;
  std::unique_ptr<ParaphraserBackend> paraphraser_;
  std::unique_ptr<CaptionerBackend> captioner_;
  std::unique_ptr<ImageGenBackend> image_gen_;
  std::unique_ptr<EmbedderBackend> embedder_;
  std::unique_ptr<LmScorerBackend> lm_scorer_;
  std::unique_ptr<ImageEmbedderBackend> image_embedder_;
};

/// Output bookkeeping for one command invocation.
class RunContext {
 public:
  RunContext(const PipelineConfig& config, std::string command);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path dir() const { return root_ / command_; }

  /// Paths are relative to the run root.
  void write_text(const std::filesystem::path& rel, std::string_view content);
  void write_json(const std::filesystem::path& rel, const nlohmann::ordered_json& j);
  /// Registers a file some other writer produced.
  void record(const std::filesystem::path& rel);
  void log(std::string line);

  /// Writes log.txt, merges outputs.json and appends to metadata.json.
  void finish(std::string_view status = "ok");

 private:
  std::filesystem::path root_;
  std::string command_;
  std::vector<std::string> written_;
  std::vector<std::string> log_;
  std::string started_;
  bool finished_ = false;
};

/// Loads a manifest, resolving image refs against its directory.
ManifestLoad load_dataset(const std::filesystem::path& manifest);

/// Loads images referenced by samples of one manifest.
ImageLoader make_image_loader(const std::filesystem::path& manifest_dir);

/// image_ref of `s` re-expressed relative to `to_dir` (absolute refs pass through).
std::string rebase_ref(const std::string& ref, const std::filesystem::path& from_dir,
                       const std::filesystem::path& to_dir);

struct Datasets {
  std::vector<TrainExample> train;
  std::vector<TrainExample> dev;
  std::vector<TrainExample> test;
};

/// Early fusion: every train row (original or augmented) is one example.
/// Multi-view: one example per original train row, with its first augmented
/// child carrying new text as the augmented-text view, its first child with
/// a new image as the augmented-image view, and (if a captioner is given) a
/// caption of the original image. Dev and test rows are originals only.
Datasets build_datasets(std::span<const MultimodalSample> samples, fusion::Arch arch,
                        const fusion::Featurizer& featurizer, const ImageLoader& load,
                        const CaptionerBackend* captioner);

/// The "model" section merged with defaults from the global seed and the
/// "train" section. Throws ConfigError on conflicts.
fusion::FusionConfig model_config(const PipelineConfig& config, const nlohmann::json& model);
TrainConfig train_config(const PipelineConfig& config);

// --- commands ----------------------------------------------------------------
// Each returns a short human-readable summary.

std::string cmd_synth(const PipelineConfig& config);
std::string cmd_ingest(const PipelineConfig& config);
std::string cmd_plan(const PipelineConfig& config);
std::string cmd_augment(const PipelineConfig& config, std::string_view modality);
std::string cmd_quality(const PipelineConfig& config);
std::string cmd_train(const PipelineConfig& config);
std::string cmd_eval(const PipelineConfig& config);
std::string cmd_report(const PipelineConfig& config);
std::string cmd_train_eval(const PipelineConfig& config);

}  // namespace crisisaug::pipeline

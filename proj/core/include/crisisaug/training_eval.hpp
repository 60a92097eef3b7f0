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

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crisisaug/data_model.hpp"
#include "crisisaug/fusion_models.hpp"

namespace crisisaug {

// --- metrics ---------------------------------------------------------------
//
// Labels are class indices in [0, 5). Length mismatches, empty inputs and
// out-of-range labels throw std::invalid_argument.

/// counts[true][pred]
using ConfusionMatrix = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;

ConfusionMatrix confusion_matrix(std::span<const std::size_t> y_true,
                                 std::span<const std::size_t> y_pred);

double accuracy(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred);

/// sum_c (support_c / N) * F1_c; F1_c = 0 when precision + recall = 0.
double weighted_f1(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  std::array<ClassMetrics, kNumClasses> per_class{};
  ConfusionMatrix confusion{};
};

/// Every metric derived from the confusion matrix alone. Throws
/// std::invalid_argument for an all-zero matrix.
EvalReport report_from_confusion(const ConfusionMatrix& cm);

nlohmann::ordered_json eval_to_json(const EvalReport& r);
EvalReport eval_from_json(const nlohmann::json& j);

/// Per-class precision/recall/F1/support, the headline metrics and the
/// confusion matrix as aligned text.
std::string format_eval_report(const EvalReport& r);

// --- training --------------------------------------------------------------

struct TrainConfig {
  std::size_t epochs = 10;
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  std::size_t batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  std::size_t image_size = 224;

  /// Throws ConfigError on epochs < 1, non-positive learning rate, etc.
  /// A learning rate of exactly 0 is accepted (frozen run).
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// An encoded example plus the id used to order gradient accumulation.
struct TrainExample {
  std::string id;
  fusion::Example example;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> dev_accuracy;
  std::optional<double> dev_weighted_f1;
};

nlohmann::ordered_json epoch_to_json(const EpochLog& e);

struct TrainResult {
  std::vector<EpochLog> log;
  /// Epoch with the highest dev weighted F1 (first wins ties); 0 without dev data.
  std::size_t best_epoch = 0;
  double best_dev_f1 = 0.0;
  /// Parameters after best_epoch. The model itself keeps the final-epoch
  /// parameters; applying these is left to the caller.
  std::optional<fusion::Parameters> best_params;
};

/// AdamW with decoupled weight decay. Each epoch shuffles with a generator
/// seeded from (seed, epoch); within a batch, gradients are accumulated in
/// ascending id order, so a single full batch does not depend on input order.
/// Throws NumericError naming the epoch and batch on a non-finite loss.
TrainResult train(fusion::FusionModel& model, std::span<const TrainExample> train_set,
                  std::span<const TrainExample> dev_set, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// One AdamW update; `step` is 1-based. Exposed for tests.
struct AdamState {
  fusion::Parameters m;
  fusion::Parameters v;
  std::size_t step = 0;
};
void adamw_step(fusion::Parameters& params, const fusion::Parameters& grads, AdamState& state,
                const TrainConfig& config);

/// Predicted class per example. Multi-view models see only the original pair
/// (auxiliary views are dropped and masked).
std::vector<std::size_t> predict(const fusion::FusionModel& model,
                                 std::span<const fusion::Example> examples,
                                 std::size_t threads = 1);

EvalReport evaluate(const fusion::FusionModel& model, std::span<const fusion::Example> examples,
                    std::size_t threads = 1);

// --- comparison tables -----------------------------------------------------

struct RunMetrics {
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
};

struct ComparisonRow {
  std::string model;
  std::optional<RunMetrics> original;
  std::optional<RunMetrics> augmented;
};

/// For each of the four columns (original acc, original F1, augmented acc,
/// augmented F1), the rows holding the column maximum. Ties mark every row.
std::array<std::vector<std::size_t>, 4> column_best(std::span<const ComparisonRow> rows);

/// Model | Original Acc | Original F1 | <augmented_label> Acc | ... F1, four
/// decimals, best per column suffixed with '*', missing cells as '-'.
/// Throws std::invalid_argument when rows is empty.
std::string comparison_report(std::span<const ComparisonRow> rows,
                              std::string_view augmented_label = "Augmented");

nlohmann::ordered_json comparison_to_json(std::span<const ComparisonRow> rows);

}  // namespace crisisaug

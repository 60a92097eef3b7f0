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

#include "crisisaug/training_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "crisisaug/error.hpp"
#include "crisisaug/executor.hpp"
#include "crisisaug/random.hpp"

namespace crisisaug {

using fusion::Example;
using fusion::FusionModel;
using fusion::Parameters;

// --- metrics -----------------------------------------------------------------

ConfusionMatrix confusion_matrix(std::span<const std::size_t> y_true,
                                 std::span<const std::size_t> y_pred) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("label vectors differ in length");
  if (y_true.empty()) throw std::invalid_argument("no labels");
  ConfusionMatrix cm{};
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] >= kNumClasses || y_pred[i] >= kNumClasses) {
      throw std::invalid_argument("label out of range at index " + std::to_string(i));
    }
    ++cm[y_true[i]][y_pred[i]];
  }
  return cm;
}

double accuracy(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred) {
  return report_from_confusion(confusion_matrix(y_true, y_pred)).accuracy;
}

double weighted_f1(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred) {
  return report_from_confusion(confusion_matrix(y_true, y_pred)).weighted_f1;
}

EvalReport report_from_confusion(const ConfusionMatrix& cm) {
  EvalReport r;
  r.confusion = cm;
  std::size_t correct = 0;
  std::array<std::size_t, kNumClasses> predicted{};
  for (std::size_t t = 0; t < kNumClasses; ++t) {
    for (std::size_t p = 0; p < kNumClasses; ++p) {
      r.n += cm[t][p];
      r.per_class[t].support += cm[t][p];
      predicted[p] += cm[t][p];
    }
    correct += cm[t][t];
  }
  if (r.n == 0) throw std::invalid_argument("empty confusion matrix");
  const double n = static_cast<double>(r.n);
  r.accuracy = static_cast<double>(correct) / n;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    ClassMetrics& m = r.per_class[c];
    const double tp = static_cast<double>(cm[c][c]);
    m.precision = predicted[c] ? tp / static_cast<double>(predicted[c]) : 0.0;
    m.recall = m.support ? tp / static_cast<double>(m.support) : 0.0;
    const double denom = m.precision + m.recall;
    m.f1 = denom > 0.0 ? 2.0 * m.precision * m.recall / denom : 0.0;
    r.weighted_f1 += static_cast<double>(m.support) / n * m.f1;
  }
  return r;
}

nlohmann::ordered_json eval_to_json(const EvalReport& r) {
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const ClassMetrics& m = r.per_class[c];
    per_class[std::string(label_name(label_from_index(c)))] = {{"precision", m.precision},
                                                              {"recall", m.recall},
                                                              {"f1", m.f1},
                                                              {"support", m.support}};
  }
  nlohmann::ordered_json confusion = nlohmann::ordered_json::array();
  for (const auto& row : r.confusion) confusion.push_back(row);
  return {{"n", r.n},
          {"accuracy", r.accuracy},
          {"weighted_f1", r.weighted_f1},
          {"per_class", per_class},
          {"confusion", confusion}};
}

EvalReport eval_from_json(const nlohmann::json& j) {
  try {
    ConfusionMatrix cm{};
    const auto& rows = j.at("confusion");
    if (rows.size() != kNumClasses) throw DataError("confusion matrix must be 5x5");
    for (std::size_t t = 0; t < kNumClasses; ++t) {
      if (rows[t].size() != kNumClasses) throw DataError("confusion matrix must be 5x5");
      for (std::size_t p = 0; p < kNumClasses; ++p) cm[t][p] = rows[t][p].get<std::size_t>();
    }
    EvalReport r = report_from_confusion(cm);
    // Stored headline values are authoritative for display; they must agree.
    r.accuracy = j.at("accuracy").get<double>();
    r.weighted_f1 = j.at("weighted_f1").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed eval report: ") + e.what());
  }
}

std::string format_eval_report(const EvalReport& r) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %9s %9s %9s %8s\n", "Class", "Precision", "Recall", "F1",
                "Support");
  os << buf;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const ClassMetrics& m = r.per_class[c];
    std::snprintf(buf, sizeof buf, "%-22s %9.4f %9.4f %9.4f %8zu\n",
                  std::string(label_name(label_from_index(c))).c_str(), m.precision, m.recall,
                  m.f1, m.support);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "\nAccuracy     %.4f\nWeighted F1  %.4f\nN            %zu\n",
                r.accuracy, r.weighted_f1, r.n);
  os << buf << "\nConfusion (rows: true, columns: predicted)\n";
  for (std::size_t t = 0; t < kNumClasses; ++t) {
    for (std::size_t p = 0; p < kNumClasses; ++p) {
      std::snprintf(buf, sizeof buf, "%7zu", r.confusion[t][p]);
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

// --- training ----------------------------------------------------------------

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) {
    throw ConfigError("train: learning_rate must be finite and >= 0");
  }
  if (!std::isfinite(weight_decay) || weight_decay < 0.0) {
    throw ConfigError("train: weight_decay must be finite and >= 0");
  }
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train: betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("train: eps must be > 0");
  if (image_size < 1) throw ConfigError("train: image_size must be >= 1");
}

nlohmann::ordered_json TrainConfig::to_json() const {
  return {{"epochs", epochs},       {"learning_rate", learning_rate},
          {"weight_decay", weight_decay}, {"batch_size", batch_size},
          {"beta1", beta1},         {"beta2", beta2},
          {"eps", eps},             {"seed", seed},
          {"image_size", image_size}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.eps = j.value("eps", c.eps);
    c.seed = j.value("seed", c.seed);
    c.image_size = j.value("image_size", c.image_size);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::ordered_json epoch_to_json(const EpochLog& e) {
  nlohmann::ordered_json j = {{"epoch", e.epoch}, {"train_loss", e.train_loss}};
  if (e.dev_accuracy) j["dev_accuracy"] = *e.dev_accuracy;
  if (e.dev_weighted_f1) j["dev_weighted_f1"] = *e.dev_weighted_f1;
  return j;
}

void adamw_step(Parameters& params, const Parameters& grads, AdamState& state,
                const TrainConfig& config) {
  if (state.m.size() != params.size()) {
    state.m = params.zeros_like();
    state.v = params.zeros_like();
    state.step = 0;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  const double lr = config.learning_rate;
  const double decay = 1.0 - lr * config.weight_decay;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k].data;
    const auto& g = grads[k].data;
    auto& m = state.m[k].data;
    auto& v = state.v[k].data;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] *= decay;
      p[i] -= lr * mhat / (std::sqrt(vhat) + config.eps);
    }
  }
}

namespace {

std::vector<Example> bare_examples(std::span<const TrainExample> set) {
  std::vector<Example> out;
  out.reserve(set.size());
  for (const TrainExample& t : set) out.push_back(t.example);
  return out;
}

}  // namespace

TrainResult train(FusionModel& model, std::span<const TrainExample> train_set,
                  std::span<const TrainExample> dev_set, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  if (train_set.empty()) throw DataError("train: empty training split");
  const std::vector<Example> dev = bare_examples(dev_set);

  TrainResult result;
  AdamState adam;
  Parameters grads = model.params().zeros_like();
  std::vector<std::size_t> order(train_set.size());
  bool have_best = false;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(config.seed, epoch));
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<std::size_t> members(order.begin() + static_cast<std::ptrdiff_t>(start),
                                       order.begin() + static_cast<std::ptrdiff_t>(end));
      std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
        return train_set[a].id < train_set[b].id;
      });
      std::vector<Example> batch;
      batch.reserve(members.size());
      for (std::size_t i : members) batch.push_back(train_set[i].example);

      grads.fill(0.0);
      double l = 0.0;
      try {
        l = model.loss_and_gradients(batch, grads);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index) + ": " + e.what());
      }
      if (!std::isfinite(l)) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index) + ": non-finite loss");
      }
      adamw_step(model.params(), grads, adam, config);
      loss_sum += l * static_cast<double>(batch.size());
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(train_set.size());
    if (!dev.empty()) {
      const EvalReport r = evaluate(model, dev);
      log.dev_accuracy = r.accuracy;
      log.dev_weighted_f1 = r.weighted_f1;
      if (!have_best || r.weighted_f1 > result.best_dev_f1) {
        have_best = true;
        result.best_epoch = epoch;
        result.best_dev_f1 = r.weighted_f1;
        result.best_params = model.params();
      }
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

std::vector<std::size_t> predict(const FusionModel& model, std::span<const Example> examples,
                                 std::size_t threads) {
  const bool multiview = model.config().arch != fusion::Arch::early_fusion;
  return ordered_map<std::size_t>(
      examples.size(),
      [&](std::size_t i) {
        const fusion::EncodedBundle& b = examples[i].bundle;
        if (!multiview) return fusion::argmax(model.forward(b));
        fusion::EncodedBundle originals;
        originals.orig_text = b.orig_text;
        originals.orig_image = b.orig_image;
        originals.presence = fusion::kOriginalsOnly;
        return fusion::argmax(model.forward(originals));
      },
      Concurrency::reentrant, threads);
}

EvalReport evaluate(const FusionModel& model, std::span<const Example> examples,
                    std::size_t threads) {
  if (examples.empty()) throw std::invalid_argument("evaluate: no samples");
  const std::vector<std::size_t> pred = predict(model, examples, threads);
  std::vector<std::size_t> truth;
  truth.reserve(examples.size());
  for (const Example& e : examples) truth.push_back(e.label);
  return report_from_confusion(confusion_matrix(truth, pred));
}

// --- comparison tables -------------------------------------------------------

namespace {

std::optional<double> cell(const ComparisonRow& r, std::size_t col) {
  const std::optional<RunMetrics>& m = col < 2 ? r.original : r.augmented;
  if (!m) return std::nullopt;
  return col % 2 == 0 ? m->accuracy : m->weighted_f1;
}

}  // namespace

std::array<std::vector<std::size_t>, 4> column_best(std::span<const ComparisonRow> rows) {
  std::array<std::vector<std::size_t>, 4> best;
  for (std::size_t col = 0; col < 4; ++col) {
    std::optional<double> top;
    for (const ComparisonRow& r : rows) {
      const auto v = cell(r, col);
      if (v && (!top || *v > *top)) top = v;
    }
    if (!top) continue;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto v = cell(rows[i], col);
      if (v && *v == *top) best[col].push_back(i);
    }
  }
  return best;
}

std::string comparison_report(std::span<const ComparisonRow> rows,
                              std::string_view augmented_label) {
  if (rows.empty()) throw std::invalid_argument("comparison_report: no runs");
  const auto best = column_best(rows);
  std::size_t width = 5;
  for (const ComparisonRow& r : rows) width = std::max(width, r.model.size());
  const std::string aug(augmented_label);
  const std::array<std::string, 4> heads = {"Original Acc", "Original F1", aug + " Acc",
                                            aug + " F1"};
  std::array<std::size_t, 4> widths{};
  for (std::size_t c = 0; c < 4; ++c) widths[c] = std::max<std::size_t>(heads[c].size(), 7);

  std::ostringstream os;
  char buf[64];
  auto pad = [&os](const std::string& s, std::size_t w, bool left) {
    if (left) os << s << std::string(w - std::min(w, s.size()), ' ');
    else os << std::string(w - std::min(w, s.size()), ' ') << s;
  };
  pad("Model", width, true);
  for (std::size_t c = 0; c < 4; ++c) {
    os << " | ";
    pad(heads[c], widths[c], false);
  }
  os << '\n' << std::string(width, '-');
  for (std::size_t c = 0; c < 4; ++c) os << "-+-" << std::string(widths[c], '-');
  os << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    pad(rows[i].model, width, true);
    for (std::size_t c = 0; c < 4; ++c) {
      os << " | ";
      const auto v = cell(rows[i], c);
      std::string s = "-";
      if (v) {
        std::snprintf(buf, sizeof buf, "%.4f", *v);
        s = buf;
        if (std::find(best[c].begin(), best[c].end(), i) != best[c].end()) s += '*';
        else s += ' ';
      }
      pad(s, widths[c], false);
    }
    os << '\n';
  }
  return os.str();
}

nlohmann::ordered_json comparison_to_json(std::span<const ComparisonRow> rows) {
  const auto best = column_best(rows);
  static constexpr std::array<const char*, 4> kCols = {"original_accuracy", "original_weighted_f1",
                                                       "augmented_accuracy",
                                                       "augmented_weighted_f1"};
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    nlohmann::ordered_json row = {{"model", rows[i].model}};
    nlohmann::ordered_json marks = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < 4; ++c) {
      const auto v = cell(rows[i], c);
      row[kCols[c]] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
      if (std::find(best[c].begin(), best[c].end(), i) != best[c].end()) marks.push_back(kCols[c]);
    }
    row["best"] = marks;
    out.push_back(row);
  }
  return out;
}

}  // namespace crisisaug

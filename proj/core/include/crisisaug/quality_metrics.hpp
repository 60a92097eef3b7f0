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

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "crisisaug/backends.hpp"

namespace crisisaug {

/// u.v / (|u| |v|), clamped to [-1, 1]. Throws std::invalid_argument on a
/// dimension mismatch or empty input and NumericError on a zero vector.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Length of the longest common subsequence, O(|a| |b|) time, O(|b|) space.
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

struct RougeL {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// precision = L/|candidate|, recall = L/|reference|, F1 with beta = 1 and
/// F1 = 0 when L = 0. Throws std::invalid_argument for an empty sequence.
RougeL rouge_l(std::span<const std::string> reference, std::span<const std::string> candidate);
/// Tokenizes both texts with text::metric_tokens first.
RougeL rouge_l_text(std::string_view reference, std::string_view candidate);

/// exp(mean(nll)). Throws std::invalid_argument for an empty sequence and
/// NumericError for a negative or non-finite value.
double perplexity_from_nll(std::span<const double> nll);
/// Tokenizes with the scorer's own tokenizer and scores the result.
double perplexity(std::string_view text, const LmScorerBackend& scorer);

/// Summation in a fixed binary-tree order, independent of thread count.
double pairwise_sum(std::span<const double> values);

struct QualityReport {
  std::string method;
  double mean_semantic_similarity = 0.0;
  double mean_rouge_l = 0.0;
  double mean_perplexity = 0.0;
  std::size_t n = 0;
};

struct TextPair {
  std::string original;
  std::string augmented;
};

/// Means over all pairs of cosine similarity (embedder), ROUGE-L F1 and the
/// perplexity of the augmented text. Per-pair failures are rethrown with the
/// pair index. Empty input is std::invalid_argument.
QualityReport corpus_quality(std::span<const TextPair> pairs, std::string_view method,
                             const EmbedderBackend& embedder, const LmScorerBackend& scorer);

/// Includes a metadata note that perplexity is measured on augmented text.
nlohmann::ordered_json quality_to_json(const QualityReport& r);
QualityReport quality_from_json(const nlohmann::json& j);

/// Aligned text table: Augmentation Method | Sem. Sim. | ROUGE-L | Perplexity.
std::string format_quality_table(std::span<const QualityReport> reports);

}  // namespace crisisaug

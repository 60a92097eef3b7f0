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

#include "crisisaug/quality_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "crisisaug/error.hpp"
#include "crisisaug/text.hpp"

namespace crisisaug {

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("cosine: dimension mismatch");
  if (u.empty()) throw std::invalid_argument("cosine: empty vectors");
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw NumericError("cosine: zero vector");
  // sqrt(fl(x*x)) == |x| in IEEE arithmetic, so cosine(u, u) is exactly 1.
  const double c = dot / std::sqrt(uu * vv);
  return std::clamp(c, -1.0, 1.0);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeL rouge_l(std::span<const std::string> reference, std::span<const std::string> candidate) {
  if (reference.empty() || candidate.empty()) {
    throw std::invalid_argument("rouge_l: empty token sequence");
  }
  const double l = static_cast<double>(lcs_length(reference, candidate));
  RougeL r;
  if (l == 0.0) return r;
  r.precision = l / static_cast<double>(candidate.size());
  r.recall = l / static_cast<double>(reference.size());
  r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

RougeL rouge_l_text(std::string_view reference, std::string_view candidate) {
  const auto ref = text::metric_tokens(reference);
  const auto cand = text::metric_tokens(candidate);
  return rouge_l(ref, cand);
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double perplexity_from_nll(std::span<const double> nll) {
  if (nll.empty()) throw std::invalid_argument("perplexity: zero tokens");
  for (double v : nll) {
    if (!std::isfinite(v) || v < 0.0) throw NumericError("perplexity: invalid token NLL");
  }
  return std::exp(pairwise_sum(nll) / static_cast<double>(nll.size()));
}

double perplexity(std::string_view text, const LmScorerBackend& scorer) {
  const auto tokens = scorer.tokenize(text);
  if (tokens.empty()) throw std::invalid_argument("perplexity: zero tokens");
  const auto nll = scorer.score(tokens);
  if (nll.size() != tokens.size()) throw BackendError("scorer returned the wrong NLL count");
  return perplexity_from_nll(nll);
}

QualityReport corpus_quality(std::span<const TextPair> pairs, std::string_view method,
                             const EmbedderBackend& embedder, const LmScorerBackend& scorer) {
  if (pairs.empty()) throw std::invalid_argument("corpus_quality: no pairs");
  std::vector<double> sims(pairs.size());
  std::vector<double> rouges(pairs.size());
  std::vector<double> ppls(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const TextPair& p = pairs[i];
    try {
      sims[i] = cosine_similarity(embedder.embed(p.original), embedder.embed(p.augmented));
      rouges[i] = rouge_l_text(p.original, p.augmented).f1;
      ppls[i] = perplexity(p.augmented, scorer);
    } catch (const BackendError& e) {
      throw BackendError("pair " + std::to_string(i) + ": " + e.what());
    } catch (const NumericError& e) {
      throw NumericError("pair " + std::to_string(i) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("pair " + std::to_string(i) + ": " + e.what());
    }
  }
  const double n = static_cast<double>(pairs.size());
  QualityReport r;
  r.method = std::string(method);
  r.n = pairs.size();
  r.mean_semantic_similarity = pairwise_sum(sims) / n;
  r.mean_rouge_l = pairwise_sum(rouges) / n;
  r.mean_perplexity = pairwise_sum(ppls) / n;
  return r;
}

nlohmann::ordered_json quality_to_json(const QualityReport& r) {
  return {{"method", r.method},
          {"n", r.n},
          {"semantic_similarity", r.mean_semantic_similarity},
          {"rouge_l", r.mean_rouge_l},
          {"perplexity", r.mean_perplexity},
          {"assumptions", {{"perplexity_text", "augmented"}, {"rouge_l_score", "f1"}}}};
}

QualityReport quality_from_json(const nlohmann::json& j) {
  try {
    QualityReport r;
    r.method = j.at("method").get<std::string>();
    r.n = j.at("n").get<std::size_t>();
    r.mean_semantic_similarity = j.at("semantic_similarity").get<double>();
    r.mean_rouge_l = j.at("rouge_l").get<double>();
    r.mean_perplexity = j.at("perplexity").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed quality report: ") + e.what());
  }
}

std::string format_quality_table(std::span<const QualityReport> reports) {
  std::size_t width = std::string_view("Augmentation Method").size();
  for (const QualityReport& r : reports) width = std::max(width, r.method.size());
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s | %9s | %9s | %10s\n", static_cast<int>(width),
                "Augmentation Method", "Sem. Sim.", "ROUGE-L", "Perplexity");
  os << buf << std::string(width, '-') << "-+-----------+-----------+-----------\n";
  for (const QualityReport& r : reports) {
    std::snprintf(buf, sizeof buf, "%-*s | %9.4f | %9.4f | %10.2f\n", static_cast<int>(width),
                  r.method.c_str(), r.mean_semantic_similarity, r.mean_rouge_l,
                  r.mean_perplexity);
    os << buf;
  }
  return os.str();
}

}  // namespace crisisaug

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
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "crisisaug/augmentation.hpp"
#include "crisisaug/backends.hpp"
#include "crisisaug/data_model.hpp"

namespace crisisaug {

// --- back-translation ------------------------------------------------------

struct TranslationHop {
  std::string source;
  std::string target;
  friend bool operator==(const TranslationHop&, const TranslationHop&) = default;
};

struct BackTranslationChain {
  std::vector<TranslationHop> hops;

  /// en -> fr -> de -> fr -> en
  static BackTranslationChain standard();

  /// Throws std::invalid_argument unless the chain is non-empty, starts and
  /// ends at `corpus_lang`, and every hop starts where the previous ended.
  void validate(std::string_view corpus_lang = "en") const;
};

struct HopOutput {
  TranslationHop hop;
  std::string text;
};

struct BackTranslation {
  std::string text;
  std::vector<HopOutput> transcript;  // one entry per hop, in order
};

/// Applies the translator hop by hop. A failing hop k (0-based) is reported
/// as BackendError naming k and its language pair.
BackTranslation back_translate(std::string_view text, const BackTranslationChain& chain,
                               const TranslatorBackend& translator);

// --- paraphrasing ----------------------------------------------------------

inline constexpr std::string_view kDefaultParaphrasePrompt =
    "Rewrite the following tweet so it keeps its meaning and Twitter style, "
    "including hashtags, emojis and informal language. Tweet: {text}";

struct ParaphraseCandidate {
  std::optional<std::string> text;  // absent when the backend failed
  std::string error;
  std::uint64_t seed = 0;
};

/// n candidates, candidate i generated with seed + i. Backend failures are
/// recorded per candidate rather than thrown. n == 0 is std::invalid_argument.
std::vector<ParaphraseCandidate> paraphrase_candidates(std::string_view text, std::size_t n,
                                                       const ParaphraserBackend& backend,
                                                       std::string_view prompt_template,
                                                       std::uint64_t seed);

using LabelChecker = std::function<bool(std::string_view text, HumanitarianLabel label)>;

struct ParaphraseFilterPolicy {
  double min_similarity = 0.60;
  double max_similarity = 0.98;
  double min_length_ratio = 0.5;
  double max_length_ratio = 2.0;
  LabelChecker label_checker;  // empty: no label check

  /// Throws std::invalid_argument on out-of-range or inverted bounds. Equal
  /// similarity bounds are allowed (a policy that rejects nearly everything).
  void validate() const;
  nlohmann::ordered_json to_json() const;
};

/// Rejection reasons, in the order the checks run.
inline constexpr std::string_view kRejectNotDiverse = "not_diverse";
inline constexpr std::string_view kRejectOffMeaning = "off_meaning";
inline constexpr std::string_view kRejectLength = "length";
inline constexpr std::string_view kRejectLabel = "label";
inline constexpr std::string_view kRejectProvenance = "provenance";
inline constexpr std::string_view kRejectBackend = "backend_error";

struct FilterOutcome {
  Verdict verdict;
  double similarity = 0.0;
  double length_ratio = 0.0;
};

/// Runs the similarity ceiling, similarity floor, token-length ratio and
/// optional label check in that order; the first failure is the verdict.
/// Embedding failures propagate as exceptions. `label` is only consulted by
/// the label checker.
FilterOutcome filter_paraphrase(std::string_view original, std::string_view candidate,
                                const ParaphraseFilterPolicy& policy,
                                const EmbedderBackend& embedder,
                                std::optional<HumanitarianLabel> label = std::nullopt);

// --- caption concatenation -------------------------------------------------

/// text + separator + caption. Throws std::invalid_argument for a blank caption.
std::string caption_augment(std::string_view text, std::string_view caption,
                            std::string_view separator = " ");

// --- corpus driver ---------------------------------------------------------

struct TextAugmentOptions {
  AugMethod method = AugMethod::back_translation;
  BackTranslationChain chain = BackTranslationChain::standard();
  std::string corpus_lang = "en";
  std::size_t n_candidates = 1;
  std::string prompt_template = std::string(kDefaultParaphrasePrompt);
  ParaphraseFilterPolicy policy;
  std::string caption_separator = " ";
  std::size_t threads = 0;  // 0: hardware concurrency
};


/// Backends needed by the selected method; unused ones may be null.
struct TextBackends {
  const TranslatorBackend* translator = nullptr;
  const ParaphraserBackend* paraphraser = nullptr;
  const EmbedderBackend* embedder = nullptr;
  const CaptionerBackend* captioner = nullptr;
  ImageLoader load_image;
};

/// One record per attempted augmentation, in input order. Inputs must all be
/// train-split samples (std::invalid_argument otherwise). Only original
/// samples are augmented; augmented inputs yield a "provenance" rejection.
/// Per-sample backend failures become "backend_error" rejections.
std::vector<AugmentationRecord> augment_text_corpus(std::span<const MultimodalSample> samples,
                                                    const TextAugmentOptions& options,
                                                    const TextBackends& backends,
                                                    std::uint64_t seed, IdAllocator& ids);

}  // namespace crisisaug

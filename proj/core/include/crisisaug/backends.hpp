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
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crisisaug/image.hpp"

namespace crisisaug {

// Adapters for every external model the pipeline talks to. Stubs in this
// header are deterministic and reentrant; plugin adapters (plugin.hpp) wrap
// external processes and are serialized.

/// Reentrant backends may be called from many threads at once. Serialized
/// backends must be driven from a single consumer (see executor.hpp).
enum class Concurrency { reentrant, serialized };

class Backend {
 public:
  virtual ~Backend() = default;
  virtual Concurrency concurrency() const { return Concurrency::reentrant; }
};

class TranslatorBackend : public Backend {
 public:
  virtual std::string translate(std::string_view text, std::string_view source_lang,
                                std::string_view target_lang) const = 0;
};

class ParaphraserBackend : public Backend {
 public:
  /// `prompt_template` contains "{text}" where the tweet is substituted.
  virtual std::string paraphrase(std::string_view text, std::string_view prompt_template,
                                 std::uint64_t seed) const = 0;
};

class CaptionerBackend : public Backend {
 public:
  virtual std::string caption(const Image& image) const = 0;
};

class ImageGenBackend : public Backend {
 public:
  /// Must return an image of identical dimensions with values in [0, 1].
  virtual Image generate(const Image& image, std::string_view prompt, double strength,
                         std::uint64_t seed) const = 0;
};

class EmbedderBackend : public Backend {
 public:
  virtual std::size_t dim() const = 0;
  /// Throws std::invalid_argument("empty input") for blank text.
  virtual std::vector<double> embed(std::string_view text) const = 0;
};

class LmScorerBackend : public Backend {
 public:
  /// Scorer-owned tokenization (vocabularies are model specific).
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
  /// Per-token negative log-likelihood, natural log.
  virtual std::vector<double> score(const std::vector<std::string>& tokens) const = 0;
};

/// Frozen image feature extractor, the image-side analogue of EmbedderBackend.
class ImageEmbedderBackend : public Backend {
 public:
  virtual std::size_t dim() const = 0;
  virtual std::vector<double> embed(const Image& image) const = 0;
};

/// Calls gen.generate and enforces the dimension/range contract.
Image checked_generate(const ImageGenBackend& gen, const Image& image,
                       std::string_view prompt, double strength, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Stubs

enum class TranslatorMode { identity, word_reverse, dictionary };

class StubTranslator final : public TranslatorBackend {
 public:
  using TokenMap = std::map<std::string, std::string, std::less<>>;

  explicit StubTranslator(TranslatorMode mode) : mode_(mode) {}

  /// Registers the token map used for source -> target in dictionary mode.
  /// Unmapped tokens pass through unchanged.
  StubTranslator& add_pair(std::string source, std::string target, TokenMap map);

  /// Small built-in en/fr/de dictionary covering the default chain.
  static StubTranslator builtin_dictionary();

  TranslatorMode mode() const { return mode_; }
  std::string translate(std::string_view text, std::string_view source_lang,
                        std::string_view target_lang) const override;

 private:
  TranslatorMode mode_;
  std::map<std::pair<std::string, std::string>, TokenMap> pairs_;
};

/// Inverse of a bijective token map. Throws std::invalid_argument when two
/// keys share a value.
StubTranslator::TokenMap invert_token_map(const StubTranslator::TokenMap& map);

enum class ParaphraserMode {
  suffix_tag,     // "<text> [p<seed>]"
  token_shuffle,  // seeded permutation of the whitespace tokens
};

class StubParaphraser final : public ParaphraserBackend {
 public:
  explicit StubParaphraser(ParaphraserMode mode) : mode_(mode) {}
  std::string paraphrase(std::string_view text, std::string_view prompt_template,
                         std::uint64_t seed) const override;

 private:
  ParaphraserMode mode_;
};

/// Describes the dominant channel and brightness, e.g.
/// "a bright photo with mostly red tones".
class StubCaptioner final : public CaptionerBackend {
 public:
  std::string caption(const Image& image) const override;
};

enum class ImageGenMode { identity, invert, tint };

class StubImageGen final : public ImageGenBackend {
 public:
  explicit StubImageGen(ImageGenMode mode, std::size_t tint_channel = 0,
                        double tint_amount = 0.2);

  /// invert maps v -> (255 - 255 v) / 255, an exact involution on the 8-bit
  /// grid that decoded images live on. tint adds tint_amount to one channel
  /// and clamps to [0, 1].
  Image generate(const Image& image, std::string_view prompt, double strength,
                 std::uint64_t seed) const override;

 private:
  ImageGenMode mode_;
  std::size_t tint_channel_;
  double tint_amount_;
};

/// Hashed bag of lowercase whitespace tokens. Every token adds 1 to one
/// coordinate, so non-empty text never maps to the zero vector. Tokens with an
/// explicit basis assignment use it instead of the hash.
class StubEmbedder final : public EmbedderBackend {
 public:
  StubEmbedder(std::size_t dim, std::uint64_t seed);

  StubEmbedder& assign_basis(std::string token, std::size_t index);

  std::size_t dim() const override { return dim_; }
  std::vector<double> embed(std::string_view text) const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  std::map<std::string, std::size_t, std::less<>> basis_;
};

/// Uniform model over a vocabulary of size V: every token costs log V.
class StubLmScorer final : public LmScorerBackend {
 public:
  explicit StubLmScorer(std::size_t vocab_size);
  std::vector<std::string> tokenize(std::string_view text) const override;
  std::vector<double> score(const std::vector<std::string>& tokens) const override;

 private:
  std::size_t vocab_size_;
};

/// Patch-mean features: the image is split into grid x grid cells and each
/// cell contributes its per-channel mean.
class StubImageEmbedder final : public ImageEmbedderBackend {
 public:
  explicit StubImageEmbedder(std::size_t grid);
  std::size_t dim() const override { return grid_ * grid_ * Image::kChannels; }
  std::vector<double> embed(const Image& image) const override;

 private:
  std::size_t grid_;
};

}  // namespace crisisaug

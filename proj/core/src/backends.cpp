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

#include "crisisaug/backends.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crisisaug/error.hpp"
#include "crisisaug/random.hpp"
#include "crisisaug/text.hpp"

namespace crisisaug {

Image checked_generate(const ImageGenBackend& gen, const Image& image,
                       std::string_view prompt, double strength, std::uint64_t seed) {
  Image out = gen.generate(image, prompt, strength, seed);
  if (!out.same_shape(image)) {
    throw BackendError("image generator changed dimensions");
  }
  if (!out.in_range()) throw BackendError("image generator produced values outside [0, 1]");
  return out;
}

// --- StubTranslator --------------------------------------------------------

StubTranslator& StubTranslator::add_pair(std::string source, std::string target,
                                         TokenMap map) {
  pairs_[{std::move(source), std::move(target)}] = std::move(map);
  return *this;
}

StubTranslator StubTranslator::builtin_dictionary() {
  const TokenMap en_fr = {
      {"flood", "inondation"}, {"fire", "feu"},          {"help", "aide"},
      {"people", "gens"},      {"damage", "dommages"},   {"rescue", "sauvetage"},
      {"storm", "tempete"},    {"water", "eau"},         {"house", "maison"},
      {"road", "route"},       {"need", "besoin"},       {"donate", "donner"},
      {"the", "le"},           {"in", "dans"},           {"and", "et"},
  };
  const TokenMap fr_de = {
      {"inondation", "Hochwasser"}, {"feu", "Feuer"},        {"aide", "Hilfe"},
      {"gens", "Leute"},            {"dommages", "Schaden"}, {"sauvetage", "Rettung"},
      {"tempete", "Sturm"},         {"eau", "Wasser"},       {"maison", "Haus"},
      {"route", "Strasse"},         {"besoin", "Bedarf"},    {"donner", "spenden"},
      {"le", "der"},                {"dans", "in_de"},       {"et", "und"},
  };
  StubTranslator t(TranslatorMode::dictionary);
  t.add_pair("en", "fr", en_fr);
  t.add_pair("fr", "de", fr_de);
  t.add_pair("de", "fr", invert_token_map(fr_de));
  t.add_pair("fr", "en", invert_token_map(en_fr));
  return t;
}

std::string StubTranslator::translate(std::string_view text, std::string_view source_lang,
                                      std::string_view target_lang) const {
  switch (mode_) {
    case TranslatorMode::identity:
      return std::string(text);
    case TranslatorMode::word_reverse: {
      auto tokens = text::whitespace_tokens(text);
      std::reverse(tokens.begin(), tokens.end());
      return text::join(tokens, " ");
    }
    case TranslatorMode::dictionary: {
      const auto it = pairs_.find({std::string(source_lang), std::string(target_lang)});
      if (it == pairs_.end()) {
        throw BackendError("no dictionary for " + std::string(source_lang) + "->" +
                           std::string(target_lang));
      }
      auto tokens = text::whitespace_tokens(text);
      for (std::string& tok : tokens) {
        if (const auto m = it->second.find(tok); m != it->second.end()) tok = m->second;
      }
      return text::join(tokens, " ");
    }
  }
  return std::string(text);
}

StubTranslator::TokenMap invert_token_map(const StubTranslator::TokenMap& map) {
  StubTranslator::TokenMap inv;
  for (const auto& [k, v] : map) {
    if (!inv.emplace(v, k).second) {
      throw std::invalid_argument("token map is not invertible at '" + v + "'");
    }
  }
  return inv;
}

// --- StubParaphraser -------------------------------------------------------

std::string StubParaphraser::paraphrase(std::string_view text, std::string_view,
                                        std::uint64_t seed) const {
  if (text::trim(text).empty()) throw std::invalid_argument("empty input");
  if (mode_ == ParaphraserMode::suffix_tag) {
    return std::string(text) + " [p" + std::to_string(seed) + "]";
  }
  auto tokens = text::whitespace_tokens(text);
  Rng rng(seed);
  rng.shuffle(tokens);
  return text::join(tokens, " ");
}

// --- StubCaptioner ---------------------------------------------------------

std::string StubCaptioner::caption(const Image& image) const {
  if (image.empty()) throw std::invalid_argument("empty image");
  double sum[3] = {0, 0, 0};
  const auto px = image.pixels();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    sum[0] += px[i];
    sum[1] += px[i + 1];
    sum[2] += px[i + 2];
  }
  const std::size_t dominant =
      static_cast<std::size_t>(std::max_element(sum, sum + 3) - sum);
  static constexpr const char* kChannelWords[] = {"red", "green", "blue"};
  const double brightness =
      (sum[0] + sum[1] + sum[2]) / static_cast<double>(px.size());
  const char* tone = brightness > 0.66 ? "bright" : brightness < 0.33 ? "dark" : "muted";
  return std::string("a ") + tone + " photo with mostly " + kChannelWords[dominant] +
         " tones";
}

// --- StubImageGen ----------------------------------------------------------

StubImageGen::StubImageGen(ImageGenMode mode, std::size_t tint_channel, double tint_amount)
    : mode_(mode), tint_channel_(tint_channel), tint_amount_(tint_amount) {
  if (tint_channel >= Image::kChannels) throw std::invalid_argument("tint channel out of range");
  if (!std::isfinite(tint_amount)) throw std::invalid_argument("tint amount must be finite");
}

Image StubImageGen::generate(const Image& image, std::string_view, double, std::uint64_t) const {
  Image out = image;
  switch (mode_) {
    case ImageGenMode::identity:
      break;
    case ImageGenMode::invert:
      for (double& v : out.pixels()) v = (255.0 - 255.0 * v) / 255.0;
      break;
    case ImageGenMode::tint: {
      auto px = out.pixels();
      for (std::size_t i = tint_channel_; i < px.size(); i += Image::kChannels) {
        px[i] = std::clamp(px[i] + tint_amount_, 0.0, 1.0);
      }
      break;
    }
  }
  return out;
}

// --- StubEmbedder ----------------------------------------------------------

StubEmbedder::StubEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 2) throw std::invalid_argument("embedder dimension must be >= 2");
}

StubEmbedder& StubEmbedder::assign_basis(std::string token, std::size_t index) {
  if (index >= dim_) throw std::invalid_argument("basis index out of range");
  basis_[text::to_lower(token)] = index;
  return *this;
}

std::vector<double> StubEmbedder::embed(std::string_view text) const {
  const auto tokens = text::whitespace_tokens(text);
  if (tokens.empty()) throw std::invalid_argument("empty input");
  std::vector<double> v(dim_, 0.0);
  const std::uint64_t basis = mix_seed(seed_) ^ 0xcbf29ce484222325ULL;
  for (const std::string& raw : tokens) {
    const std::string tok = text::to_lower(raw);
    if (const auto it = basis_.find(tok); it != basis_.end()) {
      v[it->second] += 1.0;
    } else {
      v[fnv1a64(tok, basis) % dim_] += 1.0;
    }
  }
  return v;
}

// --- StubLmScorer ----------------------------------------------------------

StubLmScorer::StubLmScorer(std::size_t vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size < 2) throw std::invalid_argument("vocabulary size must be >= 2");
}

std::vector<std::string> StubLmScorer::tokenize(std::string_view text) const {
  return text::whitespace_tokens(text);
}

std::vector<double> StubLmScorer::score(const std::vector<std::string>& tokens) const {
  return std::vector<double>(tokens.size(), std::log(static_cast<double>(vocab_size_)));
}

// --- StubImageEmbedder -----------------------------------------------------

StubImageEmbedder::StubImageEmbedder(std::size_t grid) : grid_(grid) {
  if (grid == 0) throw std::invalid_argument("grid must be >= 1");
}

std::vector<double> StubImageEmbedder::embed(const Image& image) const {
  if (image.height() < grid_ || image.width() < grid_) {
    throw std::invalid_argument("image smaller than the feature grid");
  }
  std::vector<double> out(dim(), 0.0);
  for (std::size_t gy = 0; gy < grid_; ++gy) {
    const std::size_t y0 = gy * image.height() / grid_;
    const std::size_t y1 = (gy + 1) * image.height() / grid_;
    for (std::size_t gx = 0; gx < grid_; ++gx) {
      const std::size_t x0 = gx * image.width() / grid_;
      const std::size_t x1 = (gx + 1) * image.width() / grid_;
      double* cell = &out[(gy * grid_ + gx) * Image::kChannels];
      for (std::size_t y = y0; y < y1; ++y) {
        for (std::size_t x = x0; x < x1; ++x) {
          for (std::size_t c = 0; c < Image::kChannels; ++c) cell[c] += image.at(y, x, c);
        }
      }
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      for (std::size_t c = 0; c < Image::kChannels; ++c) cell[c] /= n;
    }
  }
  return out;
}

}  // namespace crisisaug

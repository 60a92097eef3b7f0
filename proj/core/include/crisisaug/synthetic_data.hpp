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

// Deterministic synthetic corpora with class-correlated text and images.
//
// Text: every token is drawn from its class keyword pool with probability
// `signal`, otherwise from a shared noise vocabulary "w0".."w{V-1}". Pools
// are disjoint, so signal 1 makes the classes separable by bag of words.
//
// Images: a class hue painted in a class shape over a dark background,
// blended pixelwise as signal * pattern + (1 - signal) * uniform noise and
// snapped to the 8-bit grid so PNG round trips are exact.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crisisaug/data_model.hpp"
#include "crisisaug/image.hpp"
#include "crisisaug/random.hpp"

namespace crisisaug {

struct SynthSpec {
  ClassDistribution counts;
  std::size_t vocab_size = 500;
  std::size_t image_size = 32;
  double signal = 1.0;
  std::uint64_t seed = 0;
  std::size_t min_tokens = 6;
  std::size_t max_tokens = 12;

  /// Throws ConfigError for signal outside [0, 1], zero sizes, an empty
  /// corpus or min_tokens > max_tokens.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static SynthSpec from_json(const nlohmann::json& j);

  /// Counts of the published humanitarian-task split.
  static SynthSpec reference(std::uint64_t seed = 0);
  /// `per_class` train samples for every class, no dev/test.
  static SynthSpec balanced(std::size_t per_class, std::uint64_t seed = 0);
};

/// The keyword pool of a class (8 words, disjoint across classes).
const std::vector<std::string>& class_keywords(HumanitarianLabel label);

std::string synth_text(const SynthSpec& spec, HumanitarianLabel label, Rng& rng);
Image synth_image(const SynthSpec& spec, HumanitarianLabel label, Rng& rng);

struct SynthItem {
  MultimodalSample sample;
  Image image;
};

/// Rows in a seeded random order with ids "syn000000", ... and image_refs
/// "images/<id>.png". Images are generated only when `with_images` is set.
std::vector<SynthItem> generate_corpus(const SynthSpec& spec, bool with_images = true);

/// Writes <dir>/manifest.<tsv|jsonl> and, when `with_images`, the PNGs under
/// <dir>/images. Returns the manifest path. Throws ConfigError when the
/// directory cannot be written.
std::filesystem::path write_corpus(const SynthSpec& spec, const std::filesystem::path& dir,
                                   ManifestFormat format = ManifestFormat::tsv,
                                   bool with_images = true);

}  // namespace crisisaug

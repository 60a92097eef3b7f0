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

#include "crisisaug/synthetic_data.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "crisisaug/error.hpp"

namespace crisisaug {

namespace {

const std::array<std::vector<std::string>, kNumClasses> kKeywords = {{
    {"injured", "killed", "missing", "victims", "casualties", "trapped", "survivors", "wounded"},
    {"collapsed", "bridge", "destroyed", "roads", "buildings", "rubble", "flooded", "outage"},
    {"game", "music", "selfie", "concert", "movie", "coffee", "weekend", "fashion"},
    {"forecast", "update", "storm", "warning", "category", "landfall", "tracking", "satellite"},
    {"donate", "volunteers", "rescue", "shelter", "relief", "supplies", "donations", "fundraiser"},
}};

// red, orange, green, cyan, violet
constexpr std::array<std::array<double, 3>, kNumClasses> kHues = {{
    {0.90, 0.15, 0.15},
    {0.95, 0.60, 0.10},
    {0.20, 0.80, 0.25},
    {0.15, 0.75, 0.85},
    {0.60, 0.25, 0.85},
}};

// disc, square, horizontal band, vertical band, diamond
bool inside_shape(std::size_t label, double u, double v) {
  switch (label) {
    case 0: return u * u + v * v <= 0.36;
    case 1: return std::fabs(u) <= 0.5 && std::fabs(v) <= 0.5;
    case 2: return std::fabs(v) <= 0.22;
    case 3: return std::fabs(u) <= 0.22;
    default: return std::fabs(u) + std::fabs(v) <= 0.6;
  }
}

double snap(double x) { return quantize_u8(x) / 255.0; }

}  // namespace

void SynthSpec::validate() const {
  if (!(signal >= 0.0 && signal <= 1.0)) throw ConfigError("synth: signal must lie in [0, 1]");
  if (vocab_size == 0) throw ConfigError("synth: vocab_size must be >= 1");
  if (image_size == 0) throw ConfigError("synth: image_size must be >= 1");
  if (min_tokens == 0 || min_tokens > max_tokens) {
    throw ConfigError("synth: need 1 <= min_tokens <= max_tokens");
  }
  std::size_t total = 0;
  for (std::size_t s = 0; s < kNumSplits; ++s) total += counts.total(static_cast<Split>(s));
  if (total == 0) throw ConfigError("synth: the corpus would be empty");
}

nlohmann::ordered_json SynthSpec::to_json() const {
  nlohmann::ordered_json c = nlohmann::ordered_json::object();
  for (std::size_t s = 0; s < kNumSplits; ++s) {
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    for (HumanitarianLabel l : kAllLabels) {
      row[std::string(label_name(l))] = counts.counts[s][label_index(l)];
    }
    c[std::string(split_name(static_cast<Split>(s)))] = row;
  }
  return {{"counts", c},
          {"vocab_size", vocab_size},
          {"image_size", image_size},
          {"signal", signal},
          {"seed", seed},
          {"min_tokens", min_tokens},
          {"max_tokens", max_tokens}};
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
  SynthSpec s;
  try {
    if (j.contains("preset")) {
      const std::string p = j["preset"].get<std::string>();
      if (p == "reference") {
        s.counts = reference_distribution();
      } else {
        throw ConfigError("synth: unknown preset '" + p + "'");
      }
    }
    if (j.contains("counts")) {
      s.counts = ClassDistribution{};
      for (const auto& [split_key, row] : j["counts"].items()) {
        const auto split = parse_split(split_key);
        if (!split) throw ConfigError("synth: unknown split '" + split_key + "'");
        for (const auto& [label_key, n] : row.items()) {
          const auto label = parse_label(label_key);
          if (!label) throw ConfigError("synth: unknown label '" + label_key + "'");
          s.counts.counts[static_cast<std::size_t>(*split)][label_index(*label)] =
              n.get<std::size_t>();
        }
      }
    }
    s.vocab_size = j.value("vocab_size", s.vocab_size);
    s.image_size = j.value("image_size", s.image_size);
    s.signal = j.value("signal", s.signal);
    s.seed = j.value("seed", s.seed);
    s.min_tokens = j.value("min_tokens", s.min_tokens);
    s.max_tokens = j.value("max_tokens", s.max_tokens);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth spec: ") + e.what());
  }
  s.validate();
  return s;
}

SynthSpec SynthSpec::reference(std::uint64_t seed) {
  SynthSpec s;
  s.counts = reference_distribution();
  s.seed = seed;
  return s;
}

SynthSpec SynthSpec::balanced(std::size_t per_class, std::uint64_t seed) {
  SynthSpec s;
  s.counts.counts[0].fill(per_class);
  s.seed = seed;
  return s;
}

const std::vector<std::string>& class_keywords(HumanitarianLabel label) {
  return kKeywords[label_index(label)];
}

std::string synth_text(const SynthSpec& spec, HumanitarianLabel label, Rng& rng) {
  const std::size_t n = spec.min_tokens + rng.below(spec.max_tokens - spec.min_tokens + 1);
  const auto& pool = class_keywords(label);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    if (rng.uniform() < spec.signal) {
      out += pool[rng.below(pool.size())];
    } else {
      out += 'w' + std::to_string(rng.below(spec.vocab_size));
    }
  }
  return out;
}

Image synth_image(const SynthSpec& spec, HumanitarianLabel label, Rng& rng) {
  const std::size_t s = spec.image_size;
  const std::size_t c = label_index(label);
  const double cx = rng.uniform(-0.15, 0.15);
  const double cy = rng.uniform(-0.15, 0.15);
  const double bg = rng.uniform(0.05, 0.2);
  Image img(s, s);
  for (std::size_t y = 0; y < s; ++y) {
    for (std::size_t x = 0; x < s; ++x) {
      const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(s) * 2.0 - 1.0 - cx;
      const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(s) * 2.0 - 1.0 - cy;
      const bool in = inside_shape(c, u, v);
      for (std::size_t ch = 0; ch < Image::kChannels; ++ch) {
        const double pattern = in ? kHues[c][ch] : bg;
        const double noise = rng.uniform();
        img.at(y, x, ch) = snap(spec.signal * pattern + (1.0 - spec.signal) * noise);
      }
    }
  }
  return img;
}

std::vector<SynthItem> generate_corpus(const SynthSpec& spec, bool with_images) {
  spec.validate();
  Rng rng(spec.seed);
  struct Slot {
    Split split;
    HumanitarianLabel label;
  };
  std::vector<Slot> slots;
  for (std::size_t s = 0; s < kNumSplits; ++s) {
    for (HumanitarianLabel l : kAllLabels) {
      for (std::size_t k = 0; k < spec.counts.counts[s][label_index(l)]; ++k) {
        slots.push_back({static_cast<Split>(s), l});
      }
    }
  }
  rng.shuffle(slots);

  std::vector<SynthItem> out;
  out.reserve(slots.size());
  char id[32];
  for (std::size_t i = 0; i < slots.size(); ++i) {
    std::snprintf(id, sizeof id, "syn%06zu", i);
    // Per-row generators keep the text stream independent of with_images.
    Rng text_rng(mix_seed(spec.seed, 2 * i + 1));
    SynthItem item;
    item.sample.sample_id = id;
    item.sample.tweet_text = synth_text(spec, slots[i].label, text_rng);
    item.sample.image_ref = std::string("images/") + id + ".png";
    item.sample.label = slots[i].label;
    item.sample.split = slots[i].split;
    if (with_images) {
      Rng image_rng(mix_seed(spec.seed, 2 * i + 2));
      item.image = synth_image(spec, slots[i].label, image_rng);
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::filesystem::path write_corpus(const SynthSpec& spec, const std::filesystem::path& dir,
                                   ManifestFormat format, bool with_images) {
  const std::vector<SynthItem> items = generate_corpus(spec, with_images);
  std::error_code ec;
  const std::filesystem::path created = with_images ? dir / "images" : dir;
  std::filesystem::create_directories(created, ec);
  if (ec) throw ConfigError("cannot create '" + created.string() + "': " + ec.message());
  std::vector<MultimodalSample> samples;
  samples.reserve(items.size());
  for (const SynthItem& it : items) {
    samples.push_back(it.sample);
    if (with_images) save_png(it.image, dir / it.sample.image_ref);
  }
  const auto path = dir / (format == ManifestFormat::tsv ? "manifest.tsv" : "manifest.jsonl");
  write_manifest(path, samples, format);
  return path;
}

}  // namespace crisisaug

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

#include "crisisaug/image_augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crisisaug/error.hpp"
#include "crisisaug/executor.hpp"
#include "crisisaug/random.hpp"
#include "crisisaug/text.hpp"

namespace crisisaug {

Image resize(const Image& img, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw std::invalid_argument("resize: dimensions must be >= 1");
  if (img.height() == height && img.width() == width) return img;

  const double sy = static_cast<double>(img.height()) / static_cast<double>(height);
  const double sx = static_cast<double>(img.width()) / static_cast<double>(width);
  const double max_y = static_cast<double>(img.height() - 1);
  const double max_x = static_cast<double>(img.width() - 1);

  Image out(height, width);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < Image::kChannels; ++c) {
        const double top = (1.0 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
        const double bot = (1.0 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
        // Convex combination; the clamp only absorbs rounding at the ends.
        out.at(y, x, c) = std::clamp((1.0 - wy) * top + wy * bot, 0.0, 1.0);
      }
    }
  }
  return out;
}

namespace {

constexpr std::array<std::string_view, 6> kMaskNames = {"left_half", "right_half", "top_half",
                                                        "bottom_half", "full", "empty"};

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

}  // namespace

std::string_view mask_style_name(MaskStyle s) { return kMaskNames[static_cast<std::size_t>(s)]; }

std::optional<MaskStyle> parse_mask_style(std::string_view s) {
  const std::string key = text::to_lower(text::trim(s));
  for (std::size_t i = 0; i < kMaskNames.size(); ++i) {
    if (key == kMaskNames[i]) return static_cast<MaskStyle>(i);
  }
  return std::nullopt;
}

BlendMask::BlendMask(MaskStyle style, std::size_t height, std::size_t width)
    : style_(style), height_(height), width_(width), values_(height * width, 0.0) {
  if (height == 0 || width == 0) throw std::invalid_argument("mask dimensions must be >= 1");
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      bool keep = false;
      switch (style) {
        case MaskStyle::left_half: keep = x < width / 2; break;
        case MaskStyle::right_half: keep = x >= width / 2; break;
        case MaskStyle::top_half: keep = y < height / 2; break;
        case MaskStyle::bottom_half: keep = y >= height / 2; break;
        case MaskStyle::full: keep = true; break;
        case MaskStyle::empty: keep = false; break;
      }
      values_[y * width + x] = keep ? 1.0 : 0.0;
    }
  }
}

Image masked_blend(const Image& original, const Image& generated, const BlendMask& mask) {
  require_same_shape(original, generated, "masked_blend");
  if (mask.height() != original.height() || mask.width() != original.width()) {
    throw std::invalid_argument("masked_blend: mask dimension mismatch");
  }
  Image out(original.height(), original.width());
  for (std::size_t y = 0; y < original.height(); ++y) {
    for (std::size_t x = 0; x < original.width(); ++x) {
      const double m = mask.at(y, x);
      for (std::size_t c = 0; c < Image::kChannels; ++c) {
        out.at(y, x, c) = m * original.at(y, x, c) + (1.0 - m) * generated.at(y, x, c);
      }
    }
  }
  return out;
}

Image generate_fractal(std::uint64_t seed, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw std::invalid_argument("fractal dimensions must be >= 1");
  Rng rng(mix_seed(seed, 0x6a756c6961ULL));
  // Constants on the circle |c| = 0.7885 give connected, detailed Julia sets.
  constexpr double kPi = 3.14159265358979323846;
  const double theta = rng.uniform(0.0, 2.0 * kPi);
  const double cr = 0.7885 * std::cos(theta);
  const double ci = 0.7885 * std::sin(theta);
  const double zoom = rng.uniform(1.2, 1.8);
  const double phase[3] = {rng.uniform(0.0, 2.0 * kPi), rng.uniform(0.0, 2.0 * kPi),
                           rng.uniform(0.0, 2.0 * kPi)};
  const double freq = rng.uniform(0.15, 0.45);
  constexpr int kMaxIter = 96;

  const double span = static_cast<double>(std::max(height, width));
  Image out(height, width);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double zr = (2.0 * (static_cast<double>(x) + 0.5) - static_cast<double>(width)) / span * zoom;
      double zi = (2.0 * (static_cast<double>(y) + 0.5) - static_cast<double>(height)) / span * zoom;
      int it = 0;
      double mag2 = zr * zr + zi * zi;
      while (it < kMaxIter && mag2 <= 16.0) {
        const double nr = zr * zr - zi * zi + cr;
        zi = 2.0 * zr * zi + ci;
        zr = nr;
        mag2 = zr * zr + zi * zi;
        ++it;
      }
      double t = static_cast<double>(it);
      if (it < kMaxIter) t += 1.0 - std::log2(std::log(std::max(mag2, 1.0000001)) / std::log(16.0));
      for (std::size_t c = 0; c < Image::kChannels; ++c) {
        const double v = 0.5 + 0.5 * std::sin(freq * t + phase[c]);
        out.at(y, x, c) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return out;
}

Image fractal_blend(const Image& hybrid, const Image& fractal, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("fractal_blend: lambda must lie in [0, 1]");
  }
  require_same_shape(hybrid, fractal, "fractal_blend");
  Image out(hybrid.height(), hybrid.width());
  const auto h = hybrid.pixels();
  const auto f = fractal.pixels();
  auto o = out.pixels();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = std::clamp(lambda * h[i] + (1.0 - lambda) * f[i], 0.0, 1.0);
  }
  return out;
}

nlohmann::ordered_json DiffuseMixParams::to_json() const {
  return {{"prompt", prompt},           {"lambda", lambda},       {"mask_style", mask_style_name(mask_style)},
          {"fractal_seed", fractal_seed}, {"strength", strength}, {"gen_seed", gen_seed}};
}

DiffuseMixParams DiffuseMixParams::from_json(const nlohmann::json& j) {
  DiffuseMixParams p;
  try {
    p.prompt = j.at("prompt").get<std::string>();
    p.lambda = j.at("lambda").get<double>();
    const auto style = parse_mask_style(j.at("mask_style").get<std::string>());
    if (!style) throw DataError("unknown mask style");
    p.mask_style = *style;
    p.fractal_seed = j.at("fractal_seed").get<std::uint64_t>();
    p.strength = j.at("strength").get<double>();
    p.gen_seed = j.at("gen_seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed DiffuseMix params: ") + e.what());
  }
  return p;
}

DiffuseMixStages diffusemix(const Image& original, const DiffuseMixParams& params,
                            const ImageGenBackend& gen) {
  if (!(params.lambda >= 0.0 && params.lambda <= 1.0)) {
    throw std::invalid_argument("diffusemix: lambda must lie in [0, 1]");
  }
  DiffuseMixStages s;
  s.generated = checked_generate(gen, original, params.prompt, params.strength, params.gen_seed);
  s.hybrid = masked_blend(original, s.generated,
                          BlendMask(params.mask_style, original.height(), original.width()));
  s.fractal = generate_fractal(params.fractal_seed, original.height(), original.width());
  s.output = fractal_blend(s.hybrid, s.fractal, params.lambda);
  return s;
}

std::string real_guidance_prompt(std::string_view prompt_template, HumanitarianLabel label) {
  std::string out(prompt_template);
  const std::string_view key = "{label}";
  for (std::size_t pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos)) {
    out.replace(pos, key.size(), label_phrase(label));
    pos += label_phrase(label).size();
  }
  return out;
}

namespace {

MultimodalSample child_of(const MultimodalSample& parent, std::string new_id,
                          std::string image_ref) {
  MultimodalSample s = parent;
  s.sample_id = std::move(new_id);
  s.image_ref = std::move(image_ref);
  s.provenance = Provenance::augmented;
  s.parent_id = parent.sample_id;
  return s;
}

}  // namespace

ImageAugmentation diffusemix_augment(const MultimodalSample& sample, const Image& original,
                                     const DiffuseMixParams& params, const ImageGenBackend& gen,
                                     std::string new_id, std::string image_ref) {
  ImageAugmentation out;
  out.record.method = AugMethod::diffusemix;
  out.record.params = params.to_json();
  out.record.new_sample = child_of(sample, std::move(new_id), std::move(image_ref));
  out.image = diffusemix(original, params, gen).output;
  return out;
}

ImageAugmentation real_guidance_augment(const MultimodalSample& sample, const Image& original,
                                        std::string_view prompt, double strength,
                                        const ImageGenBackend& gen, std::uint64_t seed,
                                        std::string new_id, std::string image_ref) {
  if (!(strength >= 0.0 && strength <= 1.0)) {
    throw std::invalid_argument("real guidance strength must lie in [0, 1]");
  }
  ImageAugmentation out;
  out.record.method = AugMethod::real_guidance;
  out.record.params = {{"prompt", prompt}, {"strength", strength}, {"seed", seed}};
  out.record.new_sample = child_of(sample, std::move(new_id), std::move(image_ref));
  out.image = checked_generate(gen, original, prompt, strength, seed);
  return out;
}

std::size_t BalancePlan::total() const {
  std::size_t t = 0;
  for (std::size_t a : additions) t += a;
  return t;
}

BalancePlan plan_balance(const ClassDistribution& dist,
                         std::span<const HumanitarianLabel> targets, double factor) {
  if (!(factor >= 0.0) || !std::isfinite(factor)) {
    throw std::invalid_argument("balance factor must be finite and >= 0");
  }
  if (targets.empty()) throw std::invalid_argument("balance plan needs at least one target");
  BalancePlan plan;
  for (HumanitarianLabel l : targets) {
    if (std::find(kBalanceTargets.begin(), kBalanceTargets.end(), l) == kBalanceTargets.end()) {
      throw std::invalid_argument("label '" + std::string(label_name(l)) +
                                  "' is not an underrepresented class");
    }
    const auto count = static_cast<double>(dist.count(Split::train, l));
    plan.additions[label_index(l)] = static_cast<std::size_t>(std::floor(factor * count));
  }
  return plan;
}

nlohmann::ordered_json plan_to_json(const BalancePlan& plan) {
  nlohmann::ordered_json j;
  for (HumanitarianLabel l : kAllLabels) j[std::string(label_name(l))] = plan.of(l);
  j["total"] = plan.total();
  return j;
}

namespace {

struct ImageJob {
  std::size_t sample_index;
  std::string new_id;
  std::string image_ref;
  DiffuseMixParams dm;  // DiffuseMix only
  std::uint64_t seed = 0;
  std::string prompt;
};

}  // namespace

std::vector<AugmentationRecord> augment_image_corpus(std::span<const MultimodalSample> samples,
                                                     const ImageAugmentOptions& options,
                                                     const ImageGenBackend& gen,
                                                     const ImageLoader& load,
                                                     const ImageRefMaker& make_ref,
                                                     const ImageSaver& save, std::uint64_t seed,
                                                     IdAllocator& ids) {
  if (options.method != AugMethod::real_guidance && options.method != AugMethod::diffusemix) {
    throw std::invalid_argument("not an image augmentation method");
  }
  for (const MultimodalSample& s : samples) {
    if (s.split != Split::train) {
      throw std::invalid_argument("image augmentation applies to the train split only");
    }
  }

  // Originals only; augmented inputs are neither parents nor counted.
  std::vector<std::size_t> originals;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].provenance == Provenance::original) originals.push_back(i);
  }

  std::vector<ImageJob> jobs;
  if (options.method == AugMethod::real_guidance) {
    if (!(options.strength >= 0.0 && options.strength <= 1.0)) {
      throw std::invalid_argument("real guidance strength must lie in [0, 1]");
    }
    for (std::size_t i : originals) {
      ImageJob job;
      job.sample_index = i;
      job.new_id = ids.next(samples[i].sample_id);
      job.image_ref = make_ref(job.new_id);
      job.seed = mix_seed(seed, fnv1a64(samples[i].sample_id));
      job.prompt = real_guidance_prompt(options.prompt_template, samples[i].label);
      jobs.push_back(std::move(job));
    }
  } else {
    if (options.prompts.empty()) throw std::invalid_argument("diffusemix needs prompts");
    if (options.mask_styles.empty()) throw std::invalid_argument("diffusemix needs mask styles");
    if (!(options.lambda >= 0.0 && options.lambda <= 1.0)) {
      throw std::invalid_argument("diffusemix lambda must lie in [0, 1]");
    }
    std::vector<MultimodalSample> orig_samples;
    for (std::size_t i : originals) orig_samples.push_back(samples[i]);
    const BalancePlan plan = plan_balance(class_distribution(orig_samples), options.targets,
                                          options.factor);
    Rng rng(mix_seed(seed, 0x646966667573ULL));
    for (HumanitarianLabel l : kAllLabels) {
      const std::size_t wanted = plan.of(l);
      if (wanted == 0) continue;
      std::vector<std::size_t> pool;
      for (std::size_t i : originals) {
        if (samples[i].label == l) pool.push_back(i);
      }
      for (std::size_t k = 0; k < wanted; ++k) {
        const std::size_t i = pool[k % pool.size()];
        ImageJob job;
        job.sample_index = i;
        job.new_id = ids.next(samples[i].sample_id);
        job.image_ref = make_ref(job.new_id);
        job.dm.prompt = options.prompts[rng.below(options.prompts.size())];
        job.dm.mask_style = options.mask_styles[rng.below(options.mask_styles.size())];
        job.dm.lambda = options.lambda;
        job.dm.strength = options.diffusemix_strength;
        job.dm.fractal_seed = rng.next_u64();
        job.dm.gen_seed = rng.next_u64();
        jobs.push_back(std::move(job));
      }
    }
  }

  auto results = ordered_map<ImageAugmentation>(
      jobs.size(),
      [&](std::size_t j) -> ImageAugmentation {
        const ImageJob& job = jobs[j];
        const MultimodalSample& parent = samples[job.sample_index];
        try {
          const Image original = load(parent);
          if (options.method == AugMethod::real_guidance) {
            return real_guidance_augment(parent, original, job.prompt, options.strength, gen,
                                         job.seed, job.new_id, job.image_ref);
          }
          return diffusemix_augment(parent, original, job.dm, gen, job.new_id, job.image_ref);
        } catch (const std::exception& e) {
          ImageAugmentation failed;
          failed.record.method = options.method;
          failed.record.new_sample = child_of(parent, job.new_id, job.image_ref);
          failed.record.params = options.method == AugMethod::diffusemix
                                     ? job.dm.to_json()
                                     : nlohmann::ordered_json{{"prompt", job.prompt},
                                                              {"strength", options.strength},
                                                              {"seed", job.seed}};
          failed.record.params["error"] = e.what();
          failed.record.verdict = Verdict::reject("backend_error");
          return failed;
        }
      },
      gen.concurrency(), options.threads);

  std::vector<AugmentationRecord> records;
  records.reserve(results.size());
  for (ImageAugmentation& r : results) {
    if (r.image && r.record.verdict.accepted) save(*r.image, r.record.new_sample.image_ref);
    records.push_back(std::move(r.record));
  }
  return records;
}

}  // namespace crisisaug

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
#include <string_view>
#include <vector>

#include "crisisaug/augmentation.hpp"
#include "crisisaug/backends.hpp"
#include "crisisaug/data_model.hpp"
#include "crisisaug/image.hpp"

namespace crisisaug {

/// Bilinear resampling with half-pixel centers and edge clamping. Resizing
/// to the source dimensions returns the input unchanged.
Image resize(const Image& img, std::size_t height, std::size_t width);

// The four half styles are the DiffuseMix masks; full/empty are neutral
// masks (pure original / pure generated).
enum class MaskStyle { left_half, right_half, top_half, bottom_half, full, empty };

std::string_view mask_style_name(MaskStyle s);
std::optional<MaskStyle> parse_mask_style(std::string_view s);

/// Binary H x W mask; 1 keeps the original pixel, 0 takes the generated one.
/// For odd extents the "first" half (left/top) gets floor(n / 2) lines.
class BlendMask {
 public:
  BlendMask(MaskStyle style, std::size_t height, std::size_t width);

  MaskStyle style() const { return style_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  double at(std::size_t y, std::size_t x) const { return values_[y * width_ + x]; }
  std::span<const double> values() const { return values_; }

 private:
  MaskStyle style_;
  std::size_t height_;
  std::size_t width_;
  std::vector<double> values_;
};

/// mask * original + (1 - mask) * generated, per channel.
Image masked_blend(const Image& original, const Image& generated, const BlendMask& mask);

/// Escape-time Julia set whose constant and palette derive from the seed.
Image generate_fractal(std::uint64_t seed, std::size_t height, std::size_t width);

/// lambda * hybrid + (1 - lambda) * fractal. Throws std::invalid_argument for
/// lambda outside [0, 1] or mismatched shapes.
Image fractal_blend(const Image& hybrid, const Image& fractal, double lambda);

inline const std::vector<std::string>& default_style_prompts() {
  static const std::vector<std::string> prompts = {"autumn", "watercolor art", "sunset",
                                                   "mosaic"};
  return prompts;
}

struct DiffuseMixParams {
  std::string prompt = "autumn";
  double lambda = 0.2;
  MaskStyle mask_style = MaskStyle::left_half;
  std::uint64_t fractal_seed = 0;
  double strength = 0.75;
  std::uint64_t gen_seed = 0;

  nlohmann::ordered_json to_json() const;
  static DiffuseMixParams from_json(const nlohmann::json& j);
};

/// The images produced at each DiffuseMix stage.
struct DiffuseMixStages {
  Image generated;
  Image hybrid;
  Image fractal;
  Image output;
};

/// generate(prompt) -> masked_blend(mask_style) -> fractal_blend(fractal_seed, lambda).
DiffuseMixStages diffusemix(const Image& original, const DiffuseMixParams& params,
                            const ImageGenBackend& gen);

inline constexpr std::string_view kDefaultRealGuidanceTemplate = "a photo of {label}";

/// Substitutes "{label}" with the label phrase.
std::string real_guidance_prompt(std::string_view prompt_template, HumanitarianLabel label);

struct ImageAugmentation {
  AugmentationRecord record;
  std::optional<Image> image;  // absent for rejected records
};

/// Runs DiffuseMix on one sample. `image_ref` becomes the new sample's
/// image reference; the caller persists `image` there.
ImageAugmentation diffusemix_augment(const MultimodalSample& sample, const Image& original,
                                     const DiffuseMixParams& params, const ImageGenBackend& gen,
                                     std::string new_id, std::string image_ref);

/// Real Guidance: one conditioned image-to-image generation per sample.
/// Throws std::invalid_argument for strength outside [0, 1].
ImageAugmentation real_guidance_augment(const MultimodalSample& sample, const Image& original,
                                        std::string_view prompt, double strength,
                                        const ImageGenBackend& gen, std::uint64_t seed,
                                        std::string new_id, std::string image_ref);

/// The three minority classes that balancing may target.
inline constexpr std::array<HumanitarianLabel, 3> kBalanceTargets = {
    HumanitarianLabel::affected_individuals, HumanitarianLabel::infrastructure_damage,
    HumanitarianLabel::rescue_volunteering};

struct BalancePlan {
  std::array<std::size_t, kNumClasses> additions{};
  std::size_t of(HumanitarianLabel l) const { return additions[label_index(l)]; }
  std::size_t total() const;
  friend bool operator==(const BalancePlan&, const BalancePlan&) = default;
};

/// floor(factor * train count) additions per targeted label, 0 elsewhere.
/// Targeting a label outside kBalanceTargets, an empty target list, or a
/// negative/non-finite factor throws std::invalid_argument.
BalancePlan plan_balance(const ClassDistribution& dist,
                         std::span<const HumanitarianLabel> targets, double factor);

nlohmann::ordered_json plan_to_json(const BalancePlan& plan);

// --- corpus driver ---------------------------------------------------------

struct ImageAugmentOptions {
  AugMethod method = AugMethod::real_guidance;
  // Real Guidance
  std::string prompt_template = std::string(kDefaultRealGuidanceTemplate);
  double strength = 0.5;
  // DiffuseMix
  std::vector<std::string> prompts = default_style_prompts();
  std::vector<MaskStyle> mask_styles = {MaskStyle::left_half, MaskStyle::right_half,
                                        MaskStyle::top_half, MaskStyle::bottom_half};
  double lambda = 0.2;
  double diffusemix_strength = 0.75;
  std::vector<HumanitarianLabel> targets = {kBalanceTargets.begin(), kBalanceTargets.end()};
  double factor = 1.0;
  std::size_t threads = 0;
};

using ImageSaver = std::function<void(const Image&, const std::string& image_ref)>;

/// Maps a new sample id to the image_ref it will be stored under.
using ImageRefMaker = std::function<std::string(const std::string& new_id)>;

/// Real Guidance: one record per train sample. DiffuseMix: plan_balance over
/// the train distribution, then additions drawn round-robin from each targeted
/// class in input order, prompt and mask chosen by a seeded generator.
/// Accepted images are handed to `save` in record order.
std::vector<AugmentationRecord> augment_image_corpus(std::span<const MultimodalSample> samples,
                                                     const ImageAugmentOptions& options,
                                                     const ImageGenBackend& gen,
                                                     const ImageLoader& load,
                                                     const ImageRefMaker& make_ref,
                                                     const ImageSaver& save, std::uint64_t seed,
                                                     IdAllocator& ids);

}  // namespace crisisaug

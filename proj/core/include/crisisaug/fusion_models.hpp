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

// Multimodal classifiers over text + image.
//
// early_fusion:          logits = head(concat(text_vec, image_vec))
// multiview_cross:       q = fuse(concat(text_vec, image_vec));
//                        z = q + cross_attn(q, views, presence); logits = head(z)
// multiview_self_cross:  as above, with views += self_attn(views, presence) first
//
// The five view slots are fixed: original text, original image, augmented
// text, augmented image, caption. Absent views are excluded from every
// attention softmax, so their placeholder content cannot reach the logits.
// head(x) = W2 tanh(W1 x + b1) + b2.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "crisisaug/backends.hpp"
#include "crisisaug/data_model.hpp"
#include "crisisaug/image.hpp"

namespace crisisaug::fusion {

enum class Arch { early_fusion, multiview_cross, multiview_self_cross };
std::string_view arch_name(Arch a);
std::optional<Arch> parse_arch(std::string_view s);

enum class EncoderKind { toy, plugin };

struct FusionConfig {
  Arch arch = Arch::early_fusion;
  std::size_t d = 32;
  std::size_t heads = 2;
  std::size_t hidden = 32;
  std::size_t n_classes = kNumClasses;
  std::uint64_t seed = 0;

  EncoderKind text_encoder = EncoderKind::toy;
  std::size_t text_buckets = 1024;  // toy: hashed vocabulary size
  std::size_t token_dim = 32;       // toy: embedding width
  std::size_t text_feature_dim = 0; // plugin: backend embedding width

  EncoderKind image_encoder = EncoderKind::toy;
  std::size_t image_size = 224;     // square input side images are resized to
  std::size_t patch_size = 16;      // toy: square patch side
  std::size_t image_feature_dim = 0;// plugin: backend embedding width

  /// Throws ConfigError on inconsistent settings (d % heads, n_classes != 5 ...).
  void validate() const;
  std::size_t text_input_dim() const;
  std::size_t image_input_dim() const;

  nlohmann::ordered_json to_json() const;
  static FusionConfig from_json(const nlohmann::json& j);
};

/// Encoder inputs after featurization. Toy text keeps hashed token buckets;
/// plugin text and all image inputs are dense feature vectors.
struct TextInput {
  std::vector<std::uint32_t> buckets;
  std::vector<double> features;
  bool empty() const { return buckets.empty() && features.empty(); }
};

struct ImageInput {
  std::vector<double> features;
  bool empty() const { return features.empty(); }
};

enum ViewSlot : std::size_t { kOrigText = 0, kOrigImage = 1, kAugText = 2, kAugImage = 3, kCaption = 4 };
inline constexpr std::size_t kNumViews = 5;
using Presence = std::array<bool, kNumViews>;
inline constexpr Presence kOriginalsOnly = {true, true, false, false, false};
inline constexpr Presence kAllViews = {true, true, true, true, true};

/// Raw content of the five views.
struct ViewBundle {
  std::string orig_text;
  Image orig_image;
  std::string aug_text;
  Image aug_image;
  std::string caption;
  Presence presence = kOriginalsOnly;
};

struct EncodedBundle {
  TextInput orig_text;
  ImageInput orig_image;
  TextInput aug_text;
  ImageInput aug_image;
  TextInput caption;
  Presence presence = kOriginalsOnly;
};

/// Per-view d-dimensional embeddings; entries of absent views are ignored.
struct ViewEmbeddings {
  std::array<std::vector<double>, kNumViews> views;
  Presence presence = kOriginalsOnly;
};

using Logits = std::array<double, kNumClasses>;

/// Lowest index wins ties.
std::size_t argmax(const Logits& logits);

/// Hashed buckets of text::metric_tokens. Throws std::invalid_argument when no
/// token survives.
std::vector<std::uint32_t> hash_tokens(std::string_view text, std::size_t buckets);

/// Per-patch channel means, patch-major then channel. The image must already
/// be image_size x image_size (std::invalid_argument otherwise).
std::vector<double> patch_means(const Image& img, std::size_t image_size, std::size_t patch_size);

/// Turns raw views into encoder inputs. Plugin encoders need their backends.
class Featurizer {
 public:
  explicit Featurizer(const FusionConfig& config, const EmbedderBackend* text_plugin = nullptr,
                      const ImageEmbedderBackend* image_plugin = nullptr);

  TextInput text(std::string_view text) const;
  /// Resizes to the configured input size before extracting features.
  ImageInput image(const Image& img) const;
  /// Featurizes present views only; absent slots stay empty.
  EncodedBundle bundle(const ViewBundle& views) const;

 private:
  FusionConfig config_;
  const EmbedderBackend* text_plugin_;
  const ImageEmbedderBackend* image_plugin_;
};

struct Tensor {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Named parameter tensors in a fixed order (also the checkpoint order).
class Parameters {
 public:
  std::size_t add(std::string name, std::size_t rows, std::size_t cols);

  std::size_t size() const { return tensors_.size(); }
  Tensor& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
  Tensor& get(std::string_view name);
  const Tensor& get(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t scalar_count() const;
  /// Same names and shapes, all zeros.
  Parameters zeros_like() const;
  void fill(double v);

  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

 private:
  std::vector<Tensor> tensors_;
};

struct Example {
  EncodedBundle bundle;
  std::size_t label = 0;
};

class FusionModel {
 public:
  /// Initializes every weight uniformly in +-1/sqrt(fan_in) from config.seed.
  explicit FusionModel(FusionConfig config);

  const FusionConfig& config() const { return config_; }
  Parameters& params() { return params_; }
  const Parameters& params() const { return params_; }

  std::vector<double> encode_text(const TextInput& in) const;
  std::vector<double> encode_image(const ImageInput& in) const;

  /// Early fusion reads only the original pair. Multi-view models encode every
  /// present view. Throws std::invalid_argument if an original view is absent
  /// or a present view is empty.
  Logits forward(const EncodedBundle& bundle) const;

  /// Multi-view forward from precomputed view embeddings (bypasses encoders).
  Logits forward_embeddings(const ViewEmbeddings& views) const;

  /// Mean softmax cross-entropy over the batch; gradients are accumulated into
  /// `grads` (which must be zeros_like(params()) or a running sum). Throws
  /// NumericError on a non-finite loss.
  double loss_and_gradients(std::span<const Example> batch, Parameters& grads) const;

  /// Loss only, same definition as loss_and_gradients.
  double loss(std::span<const Example> batch) const;

 private:
  struct Cache;
  Logits run(const EncodedBundle* bundle, const ViewEmbeddings* embeddings, Cache* cache) const;
  void backprop(const Cache& cache, const Logits& dlogits, Parameters& grads) const;

  FusionConfig config_;
  Parameters params_;
};

/// Scaled dot-product multi-head attention over one set of projections:
/// out_i = Wo concat_h(softmax_j(q_ih . k_jh / sqrt(d_h)) v_jh) + bo, with
/// masked keys excluded. Exposed for testing the attention block alone.
struct AttentionWeights {
  std::size_t d = 0;
  std::size_t heads = 1;
  std::vector<double> wq, bq, wk, bk, wv, bv, wo, bo;  // row-major d x d, and d

  /// Identity projections with zero biases.
  static AttentionWeights identity(std::size_t d, std::size_t heads);
};

struct AttentionResult {
  std::vector<std::vector<double>> outputs;              // one per query
  std::vector<std::vector<std::vector<double>>> weights; // [head][query][key]
};

/// Throws NumericError when every key is masked and std::invalid_argument on
/// shape mismatches.
AttentionResult attention(const AttentionWeights& w, std::span<const std::vector<double>> queries,
                          std::span<const std::vector<double>> keys,
                          std::span<const std::vector<double>> values, std::span<const bool> mask);

/// One-shot toy encoders with freshly seeded weights, as standalone functions.
std::vector<double> encode_text_toy(std::string_view text, std::size_t d, std::uint64_t seed,
                                    std::size_t buckets = 1024, std::size_t token_dim = 32);
std::vector<double> encode_image_toy(const Image& img, std::size_t d, std::uint64_t seed,
                                     std::size_t image_size, std::size_t patch_size);

// --- checkpoints -----------------------------------------------------------
//
// Layout: 8-byte magic "CAUGCKPT", u32 version, u64 header length, UTF-8 JSON
// header {format, version, config, seed, parameters: [{name, shape}], metadata},
// then each parameter tensor as little-endian IEEE-754 float32 in header order.

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const FusionModel& model, const std::filesystem::path& path,
                     const nlohmann::json& metadata = nlohmann::json::object());

struct LoadedCheckpoint {
  FusionModel model;
  nlohmann::json metadata;
};

/// Throws DataError on bad magic, unknown version, or shape disagreement.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace crisisaug::fusion

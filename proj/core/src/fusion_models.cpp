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

#include "crisisaug/fusion_models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "crisisaug/error.hpp"
#include "crisisaug/image_augmentation.hpp"
#include "crisisaug/random.hpp"
#include "crisisaug/text.hpp"

namespace crisisaug::fusion {

using Vec = std::vector<double>;

namespace {

constexpr std::array<std::string_view, 3> kArchNames = {"early_fusion", "multiview_cross",
                                                        "multiview_self_cross"};

// Row-major sequence of vectors.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}
  double* row(std::size_t i) { return v.data() + i * cols; }
  const double* row(std::size_t i) const { return v.data() + i * cols; }
};

// y = W x + b for W (out x in).
void affine(const double* w, const double* b, const double* x, std::size_t out, std::size_t in,
            double* y) {
  for (std::size_t o = 0; o < out; ++o) {
    double s = b ? b[o] : 0.0;
    const double* wr = w + o * in;
    for (std::size_t i = 0; i < in; ++i) s += wr[i] * x[i];
    y[o] = s;
  }
}

// Accumulates dW += dy x^T, db += dy, and dx += W^T dy (dx may be null).
void affine_back(const double* w, const double* x, const double* dy, std::size_t out,
                 std::size_t in, double* dw, double* db, double* dx) {
  for (std::size_t o = 0; o < out; ++o) {
    const double g = dy[o];
    if (db) db[o] += g;
    if (g == 0.0) continue;
    double* dwr = dw + o * in;
    for (std::size_t i = 0; i < in; ++i) dwr[i] += g * x[i];
    if (dx) {
      const double* wr = w + o * in;
      for (std::size_t i = 0; i < in; ++i) dx[i] += g * wr[i];
    }
  }
}

// Raw pointers into one attention block's weights (and, for backprop, grads).
struct AttnParams {
  std::size_t d = 0;
  std::size_t heads = 1;
  const double* wq = nullptr;
  const double* bq = nullptr;
  const double* wk = nullptr;
  const double* bk = nullptr;
  const double* wv = nullptr;
  const double* bv = nullptr;
  const double* wo = nullptr;
  const double* bo = nullptr;
};

struct AttnGrads {
  double* wq;
  double* bq;
  double* wk;
  double* bk;
  double* wv;
  double* bv;
  double* wo;
  double* bo;
};

struct AttnCache {
  Mat qin, kin, vin;  // inputs
  Mat q, k, v;        // projections
  Mat o;              // concatenated head outputs, before Wo
  Vec a;              // [head][query][key]
  std::vector<bool> mask;
};

Mat attn_forward(const AttnParams& p, const Mat& qin, const Mat& kin, const Mat& vin,
                 const std::vector<bool>& mask, AttnCache* cache) {
  const std::size_t d = p.d;
  const std::size_t nq = qin.rows;
  const std::size_t nk = kin.rows;
  const std::size_t dh = d / p.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Mat q(nq, d), k(nk, d), v(nk, d);
  for (std::size_t i = 0; i < nq; ++i) affine(p.wq, p.bq, qin.row(i), d, d, q.row(i));
  for (std::size_t j = 0; j < nk; ++j) {
    if (!mask[j]) continue;
    affine(p.wk, p.bk, kin.row(j), d, d, k.row(j));
    affine(p.wv, p.bv, vin.row(j), d, d, v.row(j));
  }

  Vec a(p.heads * nq * nk, 0.0);
  Mat o(nq, d);
  for (std::size_t h = 0; h < p.heads; ++h) {
    const std::size_t c0 = h * dh;
    for (std::size_t i = 0; i < nq; ++i) {
      double* ai = &a[(h * nq + i) * nk];
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < nk; ++j) {
        if (!mask[j]) continue;
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += q.row(i)[c0 + c] * k.row(j)[c0 + c];
        ai[j] = s * scale;
        mx = std::max(mx, ai[j]);
      }
      if (mx == -std::numeric_limits<double>::infinity()) {
        throw NumericError("attention: every key is masked for a query");
      }
      double z = 0.0;
      for (std::size_t j = 0; j < nk; ++j) {
        if (!mask[j]) continue;
        ai[j] = std::exp(ai[j] - mx);
        z += ai[j];
      }
      for (std::size_t j = 0; j < nk; ++j) {
        if (mask[j]) ai[j] /= z;
      }
      double* oi = o.row(i) + c0;
      for (std::size_t j = 0; j < nk; ++j) {
        if (!mask[j]) continue;
        for (std::size_t c = 0; c < dh; ++c) oi[c] += ai[j] * v.row(j)[c0 + c];
      }
    }
  }

  Mat y(nq, d);
  for (std::size_t i = 0; i < nq; ++i) affine(p.wo, p.bo, o.row(i), d, d, y.row(i));
  if (cache) {
    cache->qin = qin;
    cache->kin = kin;
    cache->vin = vin;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->o = std::move(o);
    cache->a = std::move(a);
    cache->mask = mask;
  }
  return y;
}

// Accumulates parameter grads and input grads (dqin, dkin, dvin += ...).
void attn_backward(const AttnParams& p, const AttnCache& c, const Mat& dy, const AttnGrads& g,
                   Mat& dqin, Mat& dkin, Mat& dvin) {
  const std::size_t d = p.d;
  const std::size_t nq = c.qin.rows;
  const std::size_t nk = c.kin.rows;
  const std::size_t dh = d / p.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Mat d_o(nq, d);
  for (std::size_t i = 0; i < nq; ++i) {
    affine_back(p.wo, c.o.row(i), dy.row(i), d, d, g.wo, g.bo, d_o.row(i));
  }

  Mat dq(nq, d), dk(nk, d), dv(nk, d);
  Vec da(nk);
  for (std::size_t h = 0; h < p.heads; ++h) {
    const std::size_t c0 = h * dh;
    for (std::size_t i = 0; i < nq; ++i) {
      const double* ai = &c.a[(h * nq + i) * nk];
      const double* doi = d_o.row(i) + c0;
      double dot = 0.0;
      for (std::size_t j = 0; j < nk; ++j) {
        if (!c.mask[j]) continue;
        double s = 0.0;
        for (std::size_t cc = 0; cc < dh; ++cc) {
          s += doi[cc] * c.v.row(j)[c0 + cc];
          dv.row(j)[c0 + cc] += ai[j] * doi[cc];
        }
        da[j] = s;
        dot += ai[j] * s;
      }
      for (std::size_t j = 0; j < nk; ++j) {
        if (!c.mask[j]) continue;
        const double ds = ai[j] * (da[j] - dot) * scale;
        for (std::size_t cc = 0; cc < dh; ++cc) {
          dq.row(i)[c0 + cc] += ds * c.k.row(j)[c0 + cc];
          dk.row(j)[c0 + cc] += ds * c.q.row(i)[c0 + cc];
        }
      }
    }
  }

  for (std::size_t i = 0; i < nq; ++i) {
    affine_back(p.wq, c.qin.row(i), dq.row(i), d, d, g.wq, g.bq, dqin.row(i));
  }
  for (std::size_t j = 0; j < nk; ++j) {
    if (!c.mask[j]) continue;
    affine_back(p.wk, c.kin.row(j), dk.row(j), d, d, g.wk, g.bk, dkin.row(j));
    affine_back(p.wv, c.vin.row(j), dv.row(j), d, d, g.wv, g.bv, dvin.row(j));
  }
}

bool is_text_slot(std::size_t k) { return k == kOrigText || k == kAugText || k == kCaption; }

}  // namespace

std::string_view arch_name(Arch a) { return kArchNames[static_cast<std::size_t>(a)]; }

std::optional<Arch> parse_arch(std::string_view s) {
  const std::string key = text::to_lower(text::trim(s));
  for (std::size_t i = 0; i < kArchNames.size(); ++i) {
    if (key == kArchNames[i]) return static_cast<Arch>(i);
  }
  return std::nullopt;
}

// --- FusionConfig ------------------------------------------------------------

void FusionConfig::validate() const {
  if (d == 0 || heads == 0) throw ConfigError("model: d and heads must be >= 1");
  if (d % heads != 0) throw ConfigError("model: d must be divisible by heads");
  if (n_classes != kNumClasses) throw ConfigError("model: n_classes must be 5");
  if (hidden == 0) throw ConfigError("model: hidden must be >= 1");
  if (text_encoder == EncoderKind::toy) {
    if (text_buckets == 0 || token_dim == 0) {
      throw ConfigError("model: text_buckets and token_dim must be >= 1");
    }
  } else if (text_feature_dim == 0) {
    throw ConfigError("model: plugin text encoder needs text_feature_dim");
  }
  if (image_encoder == EncoderKind::toy) {
    if (image_size == 0 || patch_size == 0 || image_size % patch_size != 0) {
      throw ConfigError("model: image_size must be a positive multiple of patch_size");
    }
  } else if (image_feature_dim == 0 || image_size == 0) {
    throw ConfigError("model: plugin image encoder needs image_feature_dim and image_size");
  }
}

std::size_t FusionConfig::text_input_dim() const {
  return text_encoder == EncoderKind::toy ? token_dim : text_feature_dim;
}

std::size_t FusionConfig::image_input_dim() const {
  if (image_encoder == EncoderKind::plugin) return image_feature_dim;
  const std::size_t per_side = image_size / patch_size;
  return per_side * per_side * Image::kChannels;
}

nlohmann::ordered_json FusionConfig::to_json() const {
  return {{"arch", arch_name(arch)},
          {"d", d},
          {"heads", heads},
          {"hidden", hidden},
          {"n_classes", n_classes},
          {"seed", seed},
          {"text_encoder", text_encoder == EncoderKind::toy ? "toy" : "plugin"},
          {"text_buckets", text_buckets},
          {"token_dim", token_dim},
          {"text_feature_dim", text_feature_dim},
          {"image_encoder", image_encoder == EncoderKind::toy ? "toy" : "plugin"},
          {"image_size", image_size},
          {"patch_size", patch_size},
          {"image_feature_dim", image_feature_dim}};
}

FusionConfig FusionConfig::from_json(const nlohmann::json& j) {
  FusionConfig c;
  auto kind = [](const nlohmann::json& v) {
    const std::string s = v.get<std::string>();
    if (s == "toy") return EncoderKind::toy;
    if (s == "plugin") return EncoderKind::plugin;
    throw ConfigError("model: unknown encoder kind '" + s + "'");
  };
  try {
    if (j.contains("arch")) {
      const auto a = parse_arch(j["arch"].get<std::string>());
      if (!a) throw ConfigError("model: unknown arch '" + j["arch"].get<std::string>() + "'");
      c.arch = *a;
    }
    c.d = j.value("d", c.d);
    c.heads = j.value("heads", c.heads);
    c.hidden = j.value("hidden", c.hidden);
    c.n_classes = j.value("n_classes", c.n_classes);
    c.seed = j.value("seed", c.seed);
    if (j.contains("text_encoder")) c.text_encoder = kind(j["text_encoder"]);
    c.text_buckets = j.value("text_buckets", c.text_buckets);
    c.token_dim = j.value("token_dim", c.token_dim);
    c.text_feature_dim = j.value("text_feature_dim", c.text_feature_dim);
    if (j.contains("image_encoder")) c.image_encoder = kind(j["image_encoder"]);
    c.image_size = j.value("image_size", c.image_size);
    c.patch_size = j.value("patch_size", c.patch_size);
    c.image_feature_dim = j.value("image_feature_dim", c.image_feature_dim);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

// --- featurization -----------------------------------------------------------

std::size_t argmax(const Logits& logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

std::vector<std::uint32_t> hash_tokens(std::string_view text, std::size_t buckets) {
  if (buckets == 0) throw std::invalid_argument("buckets must be >= 1");
  const auto tokens = text::metric_tokens(text);
  if (tokens.empty()) throw std::invalid_argument("text has no tokens");
  std::vector<std::uint32_t> out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) {
    out.push_back(static_cast<std::uint32_t>(fnv1a64(t) % buckets));
  }
  return out;
}

std::vector<double> patch_means(const Image& img, std::size_t image_size, std::size_t patch_size) {
  if (img.height() != image_size || img.width() != image_size) {
    throw std::invalid_argument("image must be " + std::to_string(image_size) + "x" +
                                std::to_string(image_size) + " for patch features");
  }
  if (patch_size == 0 || image_size % patch_size != 0) {
    throw std::invalid_argument("image_size must be a multiple of patch_size");
  }
  const std::size_t per_side = image_size / patch_size;
  const double inv = 1.0 / static_cast<double>(patch_size * patch_size);
  std::vector<double> out(per_side * per_side * Image::kChannels, 0.0);
  for (std::size_t py = 0; py < per_side; ++py) {
    for (std::size_t px = 0; px < per_side; ++px) {
      double* cell = &out[(py * per_side + px) * Image::kChannels];
      for (std::size_t y = py * patch_size; y < (py + 1) * patch_size; ++y) {
        for (std::size_t x = px * patch_size; x < (px + 1) * patch_size; ++x) {
          for (std::size_t c = 0; c < Image::kChannels; ++c) cell[c] += img.at(y, x, c);
        }
      }
      for (std::size_t c = 0; c < Image::kChannels; ++c) cell[c] *= inv;
    }
  }
  return out;
}

Featurizer::Featurizer(const FusionConfig& config, const EmbedderBackend* text_plugin,
                       const ImageEmbedderBackend* image_plugin)
    : config_(config), text_plugin_(text_plugin), image_plugin_(image_plugin) {
  config_.validate();
  if (config_.text_encoder == EncoderKind::plugin) {
    if (!text_plugin_) throw ConfigError("plugin text encoder needs an embedder backend");
    if (text_plugin_->dim() != config_.text_feature_dim) {
      throw ConfigError("text embedder dimension does not match text_feature_dim");
    }
  }
  if (config_.image_encoder == EncoderKind::plugin) {
    if (!image_plugin_) throw ConfigError("plugin image encoder needs an image embedder backend");
    if (image_plugin_->dim() != config_.image_feature_dim) {
      throw ConfigError("image embedder dimension does not match image_feature_dim");
    }
  }
}

TextInput Featurizer::text(std::string_view t) const {
  TextInput in;
  if (config_.text_encoder == EncoderKind::toy) {
    in.buckets = hash_tokens(t, config_.text_buckets);
  } else {
    in.features = text_plugin_->embed(t);
  }
  return in;
}

ImageInput Featurizer::image(const Image& img) const {
  ImageInput in;
  const Image sized = resize(img, config_.image_size, config_.image_size);
  if (config_.image_encoder == EncoderKind::toy) {
    in.features = patch_means(sized, config_.image_size, config_.patch_size);
  } else {
    in.features = image_plugin_->embed(sized);
    if (in.features.size() != config_.image_feature_dim) {
      throw BackendError("image embedder returned the wrong dimension");
    }
  }
  return in;
}

EncodedBundle Featurizer::bundle(const ViewBundle& v) const {
  EncodedBundle b;
  b.presence = v.presence;
  if (v.presence[kOrigText]) b.orig_text = text(v.orig_text);
  if (v.presence[kOrigImage]) b.orig_image = image(v.orig_image);
  if (v.presence[kAugText]) b.aug_text = text(v.aug_text);
  if (v.presence[kAugImage]) b.aug_image = image(v.aug_image);
  if (v.presence[kCaption]) b.caption = text(v.caption);
  return b;
}

// --- Parameters --------------------------------------------------------------

std::size_t Parameters::add(std::string name, std::size_t rows, std::size_t cols) {
  tensors_.push_back({std::move(name), rows, cols, Vec(rows * cols, 0.0)});
  return tensors_.size() - 1;
}

Tensor& Parameters::get(std::string_view name) {
  for (Tensor& t : tensors_) {
    if (t.name == name) return t;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

const Tensor& Parameters::get(std::string_view name) const {
  return const_cast<Parameters*>(this)->get(name);
}

bool Parameters::contains(std::string_view name) const {
  return std::any_of(tensors_.begin(), tensors_.end(),
                     [&](const Tensor& t) { return t.name == name; });
}

std::size_t Parameters::scalar_count() const {
  std::size_t n = 0;
  for (const Tensor& t : tensors_) n += t.data.size();
  return n;
}

Parameters Parameters::zeros_like() const {
  Parameters p;
  for (const Tensor& t : tensors_) p.add(t.name, t.rows, t.cols);
  return p;
}

void Parameters::fill(double v) {
  for (Tensor& t : tensors_) std::fill(t.data.begin(), t.data.end(), v);
}

// --- FusionModel -------------------------------------------------------------

namespace {

void add_attention_params(Parameters& p, const std::string& prefix, std::size_t d) {
  for (const char* m : {"q", "k", "v", "o"}) {
    p.add(prefix + "." + m + ".weight", d, d);
    p.add(prefix + "." + m + ".bias", d, 1);
  }
}

AttnParams attn_view(const Parameters& p, const std::string& prefix, std::size_t d,
                     std::size_t heads) {
  AttnParams a;
  a.d = d;
  a.heads = heads;
  a.wq = p.get(prefix + ".q.weight").data.data();
  a.bq = p.get(prefix + ".q.bias").data.data();
  a.wk = p.get(prefix + ".k.weight").data.data();
  a.bk = p.get(prefix + ".k.bias").data.data();
  a.wv = p.get(prefix + ".v.weight").data.data();
  a.bv = p.get(prefix + ".v.bias").data.data();
  a.wo = p.get(prefix + ".o.weight").data.data();
  a.bo = p.get(prefix + ".o.bias").data.data();
  return a;
}

AttnGrads attn_grads(Parameters& g, const std::string& prefix) {
  return {g.get(prefix + ".q.weight").data.data(), g.get(prefix + ".q.bias").data.data(),
          g.get(prefix + ".k.weight").data.data(), g.get(prefix + ".k.bias").data.data(),
          g.get(prefix + ".v.weight").data.data(), g.get(prefix + ".v.bias").data.data(),
          g.get(prefix + ".o.weight").data.data(), g.get(prefix + ".o.bias").data.data()};
}

// Rows are summed in ascending bucket order so token order cannot change a bit.
Vec mean_pool(const Tensor& e, const std::vector<std::uint32_t>& buckets) {
  std::vector<std::uint32_t> sorted(buckets);
  std::sort(sorted.begin(), sorted.end());
  Vec pooled(e.cols, 0.0);
  for (std::uint32_t bucket : sorted) {
    if (bucket >= e.rows) throw std::invalid_argument("token bucket out of range");
    for (std::size_t c = 0; c < e.cols; ++c) pooled[c] += e.at(bucket, c);
  }
  const double inv = 1.0 / static_cast<double>(sorted.size());
  for (double& v : pooled) v *= inv;
  return pooled;
}

}  // namespace

FusionModel::FusionModel(FusionConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::size_t d = config_.d;
  if (config_.text_encoder == EncoderKind::toy) {
    params_.add("text.embedding", config_.text_buckets, config_.token_dim);
  }
  params_.add("text.proj.weight", d, config_.text_input_dim());
  params_.add("text.proj.bias", d, 1);
  params_.add("image.proj.weight", d, config_.image_input_dim());
  params_.add("image.proj.bias", d, 1);
  std::size_t head_in = 2 * d;
  if (config_.arch != Arch::early_fusion) {
    params_.add("fuse.weight", d, 2 * d);
    params_.add("fuse.bias", d, 1);
    if (config_.arch == Arch::multiview_self_cross) add_attention_params(params_, "self_attn", d);
    add_attention_params(params_, "cross_attn", d);
    head_in = d;
  }
  params_.add("head.fc1.weight", config_.hidden, head_in);
  params_.add("head.fc1.bias", config_.hidden, 1);
  params_.add("head.fc2.weight", config_.n_classes, config_.hidden);
  params_.add("head.fc2.bias", config_.n_classes, 1);

  // Biases share the fan-in of the weight registered just before them; the
  // embedding table is a lookup (fan-in 1).
  Rng rng(config_.seed);
  std::size_t fan_in = 1;
  for (Tensor& t : params_) {
    if (t.name == "text.embedding") {
      fan_in = 1;
    } else if (t.cols > 1 || t.name.ends_with(".weight")) {
      fan_in = t.cols;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : t.data) v = rng.uniform(-bound, bound);
  }
}

std::vector<double> FusionModel::encode_text(const TextInput& in) const {
  const std::size_t d = config_.d;
  const Tensor& w = params_.get("text.proj.weight");
  const Tensor& b = params_.get("text.proj.bias");
  Vec pooled;
  if (config_.text_encoder == EncoderKind::toy) {
    if (in.buckets.empty()) throw std::invalid_argument("toy text encoder: no tokens");
    pooled = mean_pool(params_.get("text.embedding"), in.buckets);
  } else {
    if (in.features.size() != config_.text_feature_dim) {
      throw std::invalid_argument("text feature dimension mismatch");
    }
    pooled = in.features;
  }
  Vec out(d);
  affine(w.data.data(), b.data.data(), pooled.data(), d, pooled.size(), out.data());
  return out;
}

std::vector<double> FusionModel::encode_image(const ImageInput& in) const {
  if (in.features.size() != config_.image_input_dim()) {
    throw std::invalid_argument("image feature dimension mismatch (expected " +
                                std::to_string(config_.image_input_dim()) + ", got " +
                                std::to_string(in.features.size()) + ")");
  }
  const Tensor& w = params_.get("image.proj.weight");
  const Tensor& b = params_.get("image.proj.bias");
  Vec out(config_.d);
  affine(w.data.data(), b.data.data(), in.features.data(), config_.d, in.features.size(),
         out.data());
  return out;
}

struct FusionModel::Cache {
  bool from_inputs = false;
  std::array<const TextInput*, kNumViews> text{};
  std::array<const ImageInput*, kNumViews> image{};
  std::array<Vec, kNumViews> pooled;  // toy/plugin text pre-projection vectors
  std::array<Vec, kNumViews> emb;
  Presence presence{};
  // head
  Vec head_in, h;
  // multi-view
  Vec fuse_in, q;
  AttnCache self, cross;
};

Logits FusionModel::run(const EncodedBundle* bundle, const ViewEmbeddings* embeddings,
                        Cache* cache) const {
  const std::size_t d = config_.d;
  Cache local;
  Cache& c = cache ? *cache : local;
  c.from_inputs = bundle != nullptr;

  if (bundle) {
    c.presence = bundle->presence;
    if (config_.arch == Arch::early_fusion) {
      c.presence = kOriginalsOnly;
    }
    if (!c.presence[kOrigText] || !c.presence[kOrigImage]) {
      throw std::invalid_argument("the original text and image views must be present");
    }
    const std::array<const TextInput*, kNumViews> texts = {&bundle->orig_text, nullptr,
                                                           &bundle->aug_text, nullptr,
                                                           &bundle->caption};
    const std::array<const ImageInput*, kNumViews> images = {nullptr, &bundle->orig_image, nullptr,
                                                             &bundle->aug_image, nullptr};
    for (std::size_t k = 0; k < kNumViews; ++k) {
      c.emb[k].assign(d, 0.0);
      if (!c.presence[k]) continue;
      if (is_text_slot(k)) {
        const TextInput& in = *texts[k];
        if (in.empty()) throw std::invalid_argument("present text view is empty");
        c.text[k] = &in;
        c.emb[k] = encode_text(in);
        if (config_.text_encoder == EncoderKind::toy) {
          c.pooled[k] = mean_pool(params_.get("text.embedding"), in.buckets);
        } else {
          c.pooled[k] = in.features;
        }
      } else {
        const ImageInput& in = *images[k];
        if (in.empty()) throw std::invalid_argument("present image view is empty");
        c.image[k] = &in;
        c.emb[k] = encode_image(in);
      }
    }
  } else {
    c.presence = embeddings->presence;
    if (!c.presence[kOrigText] || !c.presence[kOrigImage]) {
      throw std::invalid_argument("the original text and image views must be present");
    }
    for (std::size_t k = 0; k < kNumViews; ++k) {
      if (c.presence[k]) {
        if (embeddings->views[k].size() != d) {
          throw std::invalid_argument("view embedding dimension mismatch");
        }
        c.emb[k] = embeddings->views[k];
      } else {
        // Placeholder content is carried as-is; only the mask keeps it inert.
        c.emb[k] = embeddings->views[k].size() == d ? embeddings->views[k] : Vec(d, 0.0);
      }
    }
  }

  if (config_.arch == Arch::early_fusion) {
    c.head_in.resize(2 * d);
    std::copy(c.emb[kOrigText].begin(), c.emb[kOrigText].end(), c.head_in.begin());
    std::copy(c.emb[kOrigImage].begin(), c.emb[kOrigImage].end(), c.head_in.begin() + d);
  } else {
    c.fuse_in.resize(2 * d);
    std::copy(c.emb[kOrigText].begin(), c.emb[kOrigText].end(), c.fuse_in.begin());
    std::copy(c.emb[kOrigImage].begin(), c.emb[kOrigImage].end(), c.fuse_in.begin() + d);
    c.q.assign(d, 0.0);
    affine(params_.get("fuse.weight").data.data(), params_.get("fuse.bias").data.data(),
           c.fuse_in.data(), d, 2 * d, c.q.data());

    const std::vector<bool> mask(c.presence.begin(), c.presence.end());
    Mat x(kNumViews, d);
    for (std::size_t k = 0; k < kNumViews; ++k) std::copy(c.emb[k].begin(), c.emb[k].end(), x.row(k));
    if (config_.arch == Arch::multiview_self_cross) {
      const Mat sa = attn_forward(attn_view(params_, "self_attn", d, config_.heads), x, x, x, mask,
                                  cache ? &c.self : nullptr);
      for (std::size_t i = 0; i < x.v.size(); ++i) x.v[i] += sa.v[i];
    }
    Mat qm(1, d);
    std::copy(c.q.begin(), c.q.end(), qm.row(0));
    const Mat ca = attn_forward(attn_view(params_, "cross_attn", d, config_.heads), qm, x, x, mask,
                                cache ? &c.cross : nullptr);
    c.head_in.resize(d);
    for (std::size_t i = 0; i < d; ++i) c.head_in[i] = c.q[i] + ca.v[i];
  }

  const Tensor& w1 = params_.get("head.fc1.weight");
  const Tensor& b1 = params_.get("head.fc1.bias");
  const Tensor& w2 = params_.get("head.fc2.weight");
  const Tensor& b2 = params_.get("head.fc2.bias");
  c.h.assign(config_.hidden, 0.0);
  affine(w1.data.data(), b1.data.data(), c.head_in.data(), config_.hidden, c.head_in.size(),
         c.h.data());
  for (double& v : c.h) v = std::tanh(v);
  Logits logits{};
  affine(w2.data.data(), b2.data.data(), c.h.data(), config_.n_classes, config_.hidden,
         logits.data());
  return logits;
}

Logits FusionModel::forward(const EncodedBundle& bundle) const { return run(&bundle, nullptr, nullptr); }

Logits FusionModel::forward_embeddings(const ViewEmbeddings& views) const {
  return run(nullptr, &views, nullptr);
}

void FusionModel::backprop(const Cache& c, const Logits& dlogits, Parameters& g) const {
  const std::size_t d = config_.d;
  const Tensor& w1 = params_.get("head.fc1.weight");
  const Tensor& w2 = params_.get("head.fc2.weight");

  Vec dh(config_.hidden, 0.0);
  affine_back(w2.data.data(), c.h.data(), dlogits.data(), config_.n_classes, config_.hidden,
              g.get("head.fc2.weight").data.data(), g.get("head.fc2.bias").data.data(), dh.data());
  for (std::size_t i = 0; i < dh.size(); ++i) dh[i] *= 1.0 - c.h[i] * c.h[i];
  Vec dhead_in(c.head_in.size(), 0.0);
  affine_back(w1.data.data(), c.head_in.data(), dh.data(), config_.hidden, c.head_in.size(),
              g.get("head.fc1.weight").data.data(), g.get("head.fc1.bias").data.data(),
              dhead_in.data());

  std::array<Vec, kNumViews> demb;
  for (Vec& v : demb) v.assign(d, 0.0);

  if (config_.arch == Arch::early_fusion) {
    std::copy(dhead_in.begin(), dhead_in.begin() + d, demb[kOrigText].begin());
    std::copy(dhead_in.begin() + d, dhead_in.end(), demb[kOrigImage].begin());
  } else {
    // head_in = q + cross(q, x2)
    Vec dq = dhead_in;
    Mat dy(1, d);
    std::copy(dhead_in.begin(), dhead_in.end(), dy.row(0));
    Mat dqm(1, d), dx2k(kNumViews, d), dx2v(kNumViews, d);
    attn_backward(attn_view(params_, "cross_attn", d, config_.heads), c.cross, dy,
                  attn_grads(g, "cross_attn"), dqm, dx2k, dx2v);
    for (std::size_t i = 0; i < d; ++i) dq[i] += dqm.row(0)[i];
    Mat dx(kNumViews, d);
    for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] = dx2k.v[i] + dx2v.v[i];

    if (config_.arch == Arch::multiview_self_cross) {
      // x2 = x + self(x, x, x)
      Mat dsq(kNumViews, d), dsk(kNumViews, d), dsv(kNumViews, d);
      attn_backward(attn_view(params_, "self_attn", d, config_.heads), c.self, dx,
                    attn_grads(g, "self_attn"), dsq, dsk, dsv);
      for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += dsq.v[i] + dsk.v[i] + dsv.v[i];
    }
    for (std::size_t k = 0; k < kNumViews; ++k) {
      if (!c.presence[k]) continue;
      for (std::size_t i = 0; i < d; ++i) demb[k][i] += dx.row(k)[i];
    }

    Vec dfuse(2 * d, 0.0);
    affine_back(params_.get("fuse.weight").data.data(), c.fuse_in.data(), dq.data(), d, 2 * d,
                g.get("fuse.weight").data.data(), g.get("fuse.bias").data.data(), dfuse.data());
    for (std::size_t i = 0; i < d; ++i) {
      demb[kOrigText][i] += dfuse[i];
      demb[kOrigImage][i] += dfuse[d + i];
    }
  }

  if (!c.from_inputs) return;

  const Tensor& wt = params_.get("text.proj.weight");
  const Tensor& wi = params_.get("image.proj.weight");
  for (std::size_t k = 0; k < kNumViews; ++k) {
    if (!c.presence[k]) continue;
    if (is_text_slot(k)) {
      const Vec& pooled = c.pooled[k];
      Vec dpooled(pooled.size(), 0.0);
      affine_back(wt.data.data(), pooled.data(), demb[k].data(), d, pooled.size(),
                  g.get("text.proj.weight").data.data(), g.get("text.proj.bias").data.data(),
                  config_.text_encoder == EncoderKind::toy ? dpooled.data() : nullptr);
      if (config_.text_encoder == EncoderKind::toy) {
        Tensor& de = g.get("text.embedding");
        const auto& buckets = c.text[k]->buckets;
        const double inv = 1.0 / static_cast<double>(buckets.size());
        for (std::uint32_t bucket : buckets) {
          for (std::size_t col = 0; col < de.cols; ++col) de.at(bucket, col) += dpooled[col] * inv;
        }
      }
    } else {
      const Vec& f = c.image[k]->features;
      affine_back(wi.data.data(), f.data(), demb[k].data(), d, f.size(),
                  g.get("image.proj.weight").data.data(), g.get("image.proj.bias").data.data(),
                  nullptr);
    }
  }
}

namespace {

// Returns (loss, dlogits) for softmax cross-entropy.
double softmax_xent(const Logits& logits, std::size_t label, Logits* dlogits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const double lse = mx + std::log(z);
  if (dlogits) {
    for (std::size_t i = 0; i < logits.size(); ++i) {
      (*dlogits)[i] = std::exp(logits[i] - lse) - (i == label ? 1.0 : 0.0);
    }
  }
  return lse - logits[label];
}

}  // namespace

double FusionModel::loss_and_gradients(std::span<const Example> batch, Parameters& grads) const {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const double inv = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const Example& ex : batch) {
    if (ex.label >= config_.n_classes) throw std::invalid_argument("label out of range");
    Cache cache;
    const Logits logits = run(&ex.bundle, nullptr, &cache);
    Logits dl{};
    const double l = softmax_xent(logits, ex.label, &dl);
    if (!std::isfinite(l)) throw NumericError("non-finite loss");
    for (double& v : dl) v *= inv;
    backprop(cache, dl, grads);
    total += l;
  }
  return total * inv;
}

double FusionModel::loss(std::span<const Example> batch) const {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  double total = 0.0;
  for (const Example& ex : batch) {
    total += softmax_xent(forward(ex.bundle), ex.label, nullptr);
  }
  const double l = total / static_cast<double>(batch.size());
  if (!std::isfinite(l)) throw NumericError("non-finite loss");
  return l;
}

// --- standalone attention ----------------------------------------------------

AttentionWeights AttentionWeights::identity(std::size_t d, std::size_t heads) {
  AttentionWeights w;
  w.d = d;
  w.heads = heads;
  Vec eye(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) eye[i * d + i] = 1.0;
  w.wq = w.wk = w.wv = w.wo = eye;
  w.bq = w.bk = w.bv = w.bo = Vec(d, 0.0);
  return w;
}

AttentionResult attention(const AttentionWeights& w, std::span<const std::vector<double>> queries,
                          std::span<const std::vector<double>> keys,
                          std::span<const std::vector<double>> values, std::span<const bool> mask) {
  const std::size_t d = w.d;
  if (d == 0 || w.heads == 0 || d % w.heads != 0) {
    throw std::invalid_argument("attention: d must be a positive multiple of heads");
  }
  if (w.wq.size() != d * d || w.wk.size() != d * d || w.wv.size() != d * d ||
      w.wo.size() != d * d || w.bq.size() != d || w.bk.size() != d || w.bv.size() != d ||
      w.bo.size() != d) {
    throw std::invalid_argument("attention: weight shapes do not match d");
  }
  if (keys.size() != values.size() || keys.size() != mask.size()) {
    throw std::invalid_argument("attention: keys, values and mask must align");
  }
  auto pack = [d](std::span<const std::vector<double>> rows) {
    Mat m(rows.size(), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != d) throw std::invalid_argument("attention: vector dimension mismatch");
      std::copy(rows[i].begin(), rows[i].end(), m.row(i));
    }
    return m;
  };
  const Mat qm = pack(queries);
  const Mat km = pack(keys);
  const Mat vm = pack(values);
  const std::vector<bool> mk(mask.begin(), mask.end());
  AttnParams p{d,          w.heads,    w.wq.data(), w.bq.data(), w.wk.data(),
               w.bk.data(), w.wv.data(), w.bv.data(), w.wo.data(), w.bo.data()};
  AttnCache cache;
  const Mat y = attn_forward(p, qm, km, vm, mk, &cache);

  AttentionResult r;
  for (std::size_t i = 0; i < y.rows; ++i) r.outputs.emplace_back(y.row(i), y.row(i) + d);
  const std::size_t nq = qm.rows;
  const std::size_t nk = km.rows;
  r.weights.resize(w.heads);
  for (std::size_t h = 0; h < w.heads; ++h) {
    for (std::size_t i = 0; i < nq; ++i) {
      const double* a = &cache.a[(h * nq + i) * nk];
      r.weights[h].emplace_back(a, a + nk);
    }
  }
  return r;
}

std::vector<double> encode_text_toy(std::string_view text, std::size_t d, std::uint64_t seed,
                                    std::size_t buckets, std::size_t token_dim) {
  FusionConfig c;
  c.d = d;
  c.heads = 1;
  c.seed = seed;
  c.text_buckets = buckets;
  c.token_dim = token_dim;
  c.image_size = 1;
  c.patch_size = 1;
  const FusionModel m(c);
  return m.encode_text(Featurizer(c).text(text));
}

std::vector<double> encode_image_toy(const Image& img, std::size_t d, std::uint64_t seed,
                                     std::size_t image_size, std::size_t patch_size) {
  FusionConfig c;
  c.d = d;
  c.heads = 1;
  c.seed = seed;
  c.text_buckets = 1;
  c.token_dim = 1;
  c.image_size = image_size;
  c.patch_size = patch_size;
  const FusionModel m(c);
  ImageInput in;
  in.features = patch_means(img, image_size, patch_size);
  return m.encode_image(in);
}

// --- checkpoints -------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'C', 'A', 'U', 'G', 'C', 'K', 'P', 'T'};

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint64_t get_le(std::istream& in, int bytes) {
  unsigned char b[8] = {};
  in.read(reinterpret_cast<char*>(b), bytes);
  if (!in) throw DataError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace

void save_checkpoint(const FusionModel& model, const std::filesystem::path& path,
                     const nlohmann::json& metadata) {
  nlohmann::ordered_json header;
  header["format"] = "crisisaug-checkpoint";
  header["version"] = kCheckpointVersion;
  header["config"] = model.config().to_json();
  header["seed"] = model.config().seed;
  nlohmann::ordered_json shapes = nlohmann::ordered_json::array();
  for (const Tensor& t : model.params()) {
    shapes.push_back({{"name", t.name}, {"shape", {t.rows, t.cols}}});
  }
  header["parameters"] = shapes;
  header["metadata"] = metadata;
  const std::string h = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write checkpoint '" + path.string() + "'");
  out.write(kMagic, sizeof kMagic);
  put_u32(out, kCheckpointVersion);
  put_u64(out, h.size());
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const Tensor& t : model.params()) {
    for (double v : t.data) {
      const float f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof bits);
      put_u32(out, bits);
    }
  }
  if (!out) throw ConfigError("write failed for checkpoint '" + path.string() + "'");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint '" + path.string() + "'");
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw DataError("not a crisisaug checkpoint: " + path.string());
  }
  const auto version = static_cast<std::uint32_t>(get_le(in, 4));
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint64_t header_len = get_le(in, 8);
  if (header_len > (1u << 26)) throw DataError("checkpoint header too large");
  std::string h(header_len, '\0');
  in.read(h.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw DataError("checkpoint truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(h);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
  FusionModel model(FusionConfig::from_json(header.at("config")));
  const auto& shapes = header.at("parameters");
  if (shapes.size() != model.params().size()) throw DataError("checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    Tensor& t = model.params()[i];
    if (shapes[i].at("name").get<std::string>() != t.name ||
        shapes[i].at("shape")[0].get<std::size_t>() != t.rows ||
        shapes[i].at("shape")[1].get<std::size_t>() != t.cols) {
      throw DataError("checkpoint parameter '" + t.name + "' disagrees with the config");
    }
  }
  for (Tensor& t : model.params()) {
    for (double& v : t.data) {
      const auto bits = static_cast<std::uint32_t>(get_le(in, 4));
      float f;
      std::memcpy(&f, &bits, sizeof f);
      v = f;
    }
  }
  return {std::move(model), header.value("metadata", nlohmann::json::object())};
}

}  // namespace crisisaug::fusion

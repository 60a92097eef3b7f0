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

#include <cmath>

#include "doctest.h"

#include "crisisaug/backends.hpp"
#include "crisisaug/error.hpp"
#include "crisisaug/fusion_models.hpp"
#include "crisisaug/random.hpp"
#include "crisisaug/text.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/support.hpp"

using namespace crisisaug;
using namespace crisisaug::fusion;

namespace {

FusionConfig tiny(Arch arch, std::uint64_t seed = 1) {
  FusionConfig c;
  c.arch = arch;
  c.d = 8;
  c.heads = 2;
  c.hidden = 8;
  c.seed = seed;
  c.text_buckets = 16;
  c.token_dim = 4;
  c.image_size = 4;
  c.patch_size = 2;
  return c;
}

TextInput random_text_input(Rng& rng, std::size_t buckets) {
  TextInput t;
  const std::size_t n = 1 + rng.below(6);
  for (std::size_t i = 0; i < n; ++i) t.buckets.push_back(static_cast<std::uint32_t>(rng.below(buckets)));
  return t;
}

ImageInput random_image_input(Rng& rng, std::size_t dim) {
  ImageInput im;
  for (std::size_t i = 0; i < dim; ++i) im.features.push_back(rng.uniform());
  return im;
}

EncodedBundle random_bundle(Rng& rng, const FusionConfig& c, Presence presence) {
  EncodedBundle b;
  b.orig_text = random_text_input(rng, c.text_buckets);
  b.orig_image = random_image_input(rng, c.image_input_dim());
  b.aug_text = random_text_input(rng, c.text_buckets);
  b.aug_image = random_image_input(rng, c.image_input_dim());
  b.caption = random_text_input(rng, c.text_buckets);
  b.presence = presence;
  return b;
}

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

AttentionWeights random_attention(Rng& rng, std::size_t d, std::size_t heads) {
  AttentionWeights w;
  w.d = d;
  w.heads = heads;
  w.wq = random_vec(rng, d * d);
  w.wk = random_vec(rng, d * d);
  w.wv = random_vec(rng, d * d);
  w.wo = random_vec(rng, d * d);
  w.bq = random_vec(rng, d);
  w.bk = random_vec(rng, d);
  w.bv = random_vec(rng, d);
  w.bo = random_vec(rng, d);
  return w;
}

}  // namespace

TEST_CASE("config validation") {
  FusionConfig c = tiny(Arch::multiview_cross);
  CHECK_NOTHROW(c.validate());
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny(Arch::early_fusion);
  c.patch_size = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny(Arch::early_fusion);
  c.n_classes = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  const FusionConfig back = FusionConfig::from_json(tiny(Arch::multiview_self_cross).to_json());
  CHECK(back.to_json() == tiny(Arch::multiview_self_cross).to_json());
  CHECK_THROWS_AS(FusionConfig::from_json({{"arch", "late_fusion"}}), ConfigError);
}

TEST_CASE("parameter order and shapes") {
  const FusionModel m(tiny(Arch::multiview_self_cross));
  std::vector<std::string> names;
  for (const Tensor& t : m.params()) names.push_back(t.name);
  REQUIRE(names.size() == 1 + 2 + 2 + 2 + 8 + 8 + 4);
  CHECK(names.front() == "text.embedding");
  CHECK(names[5] == "fuse.weight");
  CHECK(names[7] == "self_attn.q.weight");
  CHECK(names[15] == "cross_attn.q.weight");
  CHECK(names.back() == "head.fc2.bias");
  CHECK(m.params().get("fuse.weight").cols == 16);
  CHECK(m.params().get("head.fc1.weight").cols == 8);
  CHECK(FusionModel(tiny(Arch::early_fusion)).params().get("head.fc1.weight").cols == 16);
  CHECK_FALSE(FusionModel(tiny(Arch::multiview_cross)).params().contains("self_attn.q.weight"));
}

TEST_CASE("initialization bounds follow fan-in") {
  const FusionModel m(tiny(Arch::multiview_cross));
  for (const Tensor& t : m.params()) {
    double bound = 1.0;
    if (t.name != "text.embedding") {
      std::string w = t.name;
      if (w.ends_with(".bias")) w.replace(w.size() - 4, 4, "weight");
      bound = 1.0 / std::sqrt(static_cast<double>(m.params().get(w).cols));
    }
    for (double v : t.data) CHECK(std::abs(v) <= bound);
  }
  CHECK(FusionModel(tiny(Arch::early_fusion, 3)).params()[0].data ==
        FusionModel(tiny(Arch::early_fusion, 3)).params()[0].data);
}

TEST_CASE("toy text encoder: determinism and order freedom") {
  const auto a = encode_text_toy("help the flood victims", 8, 2, 64, 4);
  CHECK(a == encode_text_toy("help the flood victims", 8, 2, 64, 4));
  CHECK(a == encode_text_toy("victims flood the help", 8, 2, 64, 4));
  CHECK(a != encode_text_toy("help the flood victims", 8, 3, 64, 4));
  CHECK_THROWS_AS(encode_text_toy("  ", 8, 2, 64, 4), std::invalid_argument);
}

TEST_CASE("toy text encoder matches a scalar loop") {
  FusionConfig c;
  c.d = 8;
  c.heads = 1;
  c.seed = 5;
  c.text_buckets = 32;
  c.token_dim = 6;
  c.image_size = 1;
  c.patch_size = 1;
  const FusionModel m(c);
  const std::string text = "Water rising near the bridge, send help!";
  const auto& e = m.params().get("text.embedding");
  const auto& w = m.params().get("text.proj.weight");
  const auto& b = m.params().get("text.proj.bias");
  const auto tokens = text::metric_tokens(text);
  std::vector<double> pooled(6, 0.0);
  for (const auto& t : tokens) {
    const std::size_t row = fnv1a64(t) % 32;
    for (std::size_t k = 0; k < 6; ++k) pooled[k] += e.data[row * 6 + k] / static_cast<double>(tokens.size());
  }
  const auto got = encode_text_toy(text, 8, 5, 32, 6);
  for (std::size_t r = 0; r < 8; ++r) {
    double s = b.data[r];
    for (std::size_t k = 0; k < 6; ++k) s += w.data[r * 6 + k] * pooled[k];
    CHECK(std::abs(got[r] - s) < 1e-6);
  }
}

TEST_CASE("toy image encoder on a constant image") {
  const Image img = Image::filled(8, 8, 0.25, 0.5, 1.0);
  FusionConfig c;
  c.d = 6;
  c.heads = 1;
  c.seed = 7;
  c.text_buckets = 1;
  c.token_dim = 1;
  c.image_size = 8;
  c.patch_size = 4;
  const FusionModel m(c);
  const auto& w = m.params().get("image.proj.weight");
  const auto& b = m.params().get("image.proj.bias");
  const double colour[3] = {0.25, 0.5, 1.0};
  const auto got = encode_image_toy(img, 6, 7, 8, 4);
  for (std::size_t r = 0; r < 6; ++r) {
    double s = b.data[r];
    for (std::size_t patch = 0; patch < 4; ++patch)
      for (std::size_t ch = 0; ch < 3; ++ch) s += w.data[r * 12 + patch * 3 + ch] * colour[ch];
    CHECK(std::abs(got[r] - s) < 1e-12);
  }
  CHECK(got == encode_image_toy(img, 6, 7, 8, 4));
}

TEST_CASE("toy image encoder ignores pixel order within a patch") {
  Rng rng(3);
  Image img(8, 8);
  for (double& v : img.pixels()) v = static_cast<double>(rng.below(257)) / 256.0;
  Image shuffled = img;
  // Swap two pixels of the top-left 4x4 patch and two of the bottom-right.
  for (std::size_t ch = 0; ch < 3; ++ch) {
    std::swap(shuffled.at(0, 0, ch), shuffled.at(3, 2, ch));
    std::swap(shuffled.at(5, 6, ch), shuffled.at(7, 4, ch));
  }
  CHECK(encode_image_toy(img, 8, 1, 8, 4) == encode_image_toy(shuffled, 8, 1, 8, 4));
  CHECK_THROWS_AS(encode_image_toy(Image(4, 4), 8, 1, 8, 4), std::invalid_argument);
}

TEST_CASE("featurizer resizes images before patch extraction") {
  const FusionConfig c = tiny(Arch::early_fusion);
  const Featurizer f(c);
  const auto in = f.image(Image::filled(13, 9, 0.5, 0.5, 0.5));
  CHECK(in.features.size() == c.image_input_dim());
  for (double v : in.features) CHECK(v == doctest::Approx(0.5));
  ViewBundle vb;
  vb.orig_text = "hello world";
  vb.orig_image = Image::filled(4, 4, 0.1, 0.2, 0.3);
  vb.aug_text = "ignored";
  const auto b = f.bundle(vb);
  CHECK(b.aug_text.empty());
  CHECK_FALSE(b.orig_text.empty());
}

TEST_CASE("plugin featurizer checks dimensions") {
  FusionConfig c = tiny(Arch::early_fusion);
  c.text_encoder = EncoderKind::plugin;
  c.text_feature_dim = 16;
  StubEmbedder e16(16, 0), e8(8, 0);
  CHECK_NOTHROW(Featurizer(c, &e16));
  CHECK_THROWS_AS(Featurizer(c, &e8), ConfigError);
  CHECK_THROWS_AS(Featurizer{c}, ConfigError);
  const FusionModel m(c);
  const Featurizer f(c, &e16);
  EncodedBundle b;
  b.orig_text = f.text("some text");
  b.orig_image = f.image(Image::filled(4, 4, 0.2, 0.2, 0.2));
  const auto got = m.forward(b);
  const auto want = oracle::forward(m, b);
  for (std::size_t i = 0; i < kNumClasses; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-9);
}

TEST_CASE("attention: singleton key returns its value") {
  Rng rng(4);
  const auto w = AttentionWeights::identity(4, 2);
  const std::vector<std::vector<double>> q = {random_vec(rng, 4)};
  const std::vector<std::vector<double>> kv = {random_vec(rng, 4)};
  const bool mask[] = {true};
  const auto r = attention(w, q, kv, kv, mask);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(r.outputs[0][i] - kv[0][i]) < 1e-6);
  CHECK(r.weights[0][0][0] == 1.0);
}

TEST_CASE("attention: identical keys split weight evenly") {
  const auto w = AttentionWeights::identity(4, 1);
  const std::vector<std::vector<double>> q = {{0.3, -0.1, 0.7, 0.2}};
  const std::vector<std::vector<double>> k = {{1, 2, 3, 4}, {1, 2, 3, 4}};
  const std::vector<std::vector<double>> v = {{1, 0, 0, 2}, {0, 1, 0, 4}};
  const bool mask[] = {true, true};
  const auto r = attention(w, q, k, v, mask);
  CHECK(r.weights[0][0][0] == doctest::Approx(0.5));
  CHECK(r.weights[0][0][1] == doctest::Approx(0.5));
  const double mean[] = {0.5, 0.5, 0.0, 3.0};
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(r.outputs[0][i] - mean[i]) < 1e-12);
}

TEST_CASE("attention matches a scalar loop, masked rows sum to one") {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const std::size_t heads = 1 + rng.below(3);
    const std::size_t d = heads * (1 + rng.below(3));
    const auto w = random_attention(rng, d, heads);
    const std::size_t nq = 1 + rng.below(3), nk = 1 + rng.below(5);
    std::vector<std::vector<double>> q, k, v;
    for (std::size_t i = 0; i < nq; ++i) q.push_back(random_vec(rng, d));
    for (std::size_t j = 0; j < nk; ++j) {
      k.push_back(random_vec(rng, d));
      v.push_back(random_vec(rng, d));
    }
    std::unique_ptr<bool[]> mask(new bool[nk]);
    std::vector<bool> mv(nk);
    for (std::size_t j = 0; j < nk; ++j) mask[j] = mv[j] = rng.bernoulli(0.7);
    mask[0] = mv[0] = true;
    const auto r = attention(w, q, k, v, std::span<const bool>(mask.get(), nk));
    for (std::size_t i = 0; i < nq; ++i) {
      std::vector<std::vector<double>> ow;
      const auto want = oracle::mha(w.wq, w.bq, w.wk, w.bk, w.wv, w.bv, w.wo, w.bo, d, heads, q[i],
                                    k, v, mv, &ow);
      for (std::size_t c = 0; c < d; ++c) CHECK(std::abs(r.outputs[i][c] - want[c]) < 1e-6);
      for (std::size_t h = 0; h < heads; ++h) {
        double sum = 0;
        for (std::size_t j = 0; j < nk; ++j) {
          sum += r.weights[h][i][j];
          if (!mv[j]) CHECK(r.weights[h][i][j] == 0.0);
          CHECK(std::abs(r.weights[h][i][j] - ow[h][j]) < 1e-9);
        }
        CHECK(std::abs(sum - 1.0) < 1e-6);
      }
    }
  }
}

TEST_CASE("attention with every key masked is a numeric error") {
  const auto w = AttentionWeights::identity(2, 1);
  const std::vector<std::vector<double>> q = {{1, 0}}, kv = {{0, 1}};
  const bool mask[] = {false};
  CHECK_THROWS_AS(attention(w, q, kv, kv, mask), NumericError);
  const bool ok[] = {true};
  CHECK_THROWS_AS(attention(w, q, std::vector<std::vector<double>>{{1, 2, 3}}, kv, ok),
                  std::invalid_argument);
}

TEST_CASE("zeroed output layer gives zero logits") {
  for (Arch a : {Arch::early_fusion, Arch::multiview_cross, Arch::multiview_self_cross}) {
    FusionModel m(tiny(a));
    m.params().get("head.fc2.weight").data.assign(m.params().get("head.fc2.weight").data.size(), 0.0);
    m.params().get("head.fc2.bias").data.assign(kNumClasses, 0.0);
    Rng rng(6);
    const auto z = m.forward(random_bundle(rng, m.config(), kAllViews));
    for (double v : z) CHECK(v == 0.0);
  }
}

TEST_CASE("fixed small weights match the scalar forward oracle") {
  for (Arch a : {Arch::early_fusion, Arch::multiview_cross, Arch::multiview_self_cross}) {
    FusionModel m(tiny(a));
    std::size_t k = 0;
    for (Tensor& t : m.params()) {
      for (double& v : t.data) v = 0.05 * static_cast<double>(static_cast<int>(k++ % 11) - 5);
    }
    Rng rng(7);
    const auto b = random_bundle(rng, m.config(), kAllViews);
    const auto got = m.forward(b);
    const auto want = oracle::forward(m, b);
    for (std::size_t i = 0; i < kNumClasses; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-6);
  }
}

TEST_CASE("random tiny models match the scalar forward oracle") {
  Rng rng(8);
  for (int t = 0; t < 30; ++t) {
    const Arch a = static_cast<Arch>(rng.below(3));
    const FusionModel m(tiny(a, rng.next_u64()));
    Presence p = kOriginalsOnly;
    for (std::size_t s = 2; s < kNumViews; ++s) p[s] = rng.bernoulli(0.5);
    const auto b = random_bundle(rng, m.config(), p);
    const auto got = m.forward(b);
    const auto want = oracle::forward(m, b);
    for (std::size_t i = 0; i < kNumClasses; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-5);
  }
}

TEST_CASE("boundary images give finite logits") {
  const FusionConfig c = tiny(Arch::early_fusion);
  const FusionModel m(c);
  const Featurizer f(c);
  for (double v : {0.0, 1.0}) {
    EncodedBundle b;
    b.orig_text = f.text("x");
    b.orig_image = f.image(Image::filled(4, 4, v, v, v));
    for (double z : m.forward(b)) CHECK(std::isfinite(z));
  }
}

TEST_CASE("absent views are inert placeholders") {
  Rng rng(9);
  for (Arch a : {Arch::multiview_cross, Arch::multiview_self_cross}) {
    const FusionModel m(tiny(a, 4));
    for (int t = 0; t < 20; ++t) {
      EncodedBundle b = random_bundle(rng, m.config(), kOriginalsOnly);
      const auto base = m.forward(b);
      b.aug_text = random_text_input(rng, 16);
      b.aug_image = random_image_input(rng, m.config().image_input_dim());
      b.caption = random_text_input(rng, 16);
      CHECK(m.forward(b) == base);
      b.aug_text = {};
      b.aug_image = {};
      b.caption = {};
      CHECK(m.forward(b) == base);

      ViewEmbeddings ve;
      ve.presence = kOriginalsOnly;
      for (auto& v : ve.views) v = random_vec(rng, 8);
      const auto e1 = m.forward_embeddings(ve);
      for (std::size_t s = 2; s < kNumViews; ++s) ve.views[s] = random_vec(rng, 8, 1e6);
      CHECK(m.forward_embeddings(ve) == e1);
    }
  }
}

TEST_CASE("identical views reduce cross-attention to the value projection") {
  const FusionModel m(tiny(Arch::multiview_cross, 11));
  Rng rng(10);
  const auto e = random_vec(rng, 8);
  ViewEmbeddings ve;
  ve.presence = kAllViews;
  for (auto& v : ve.views) v = e;
  const auto& p = m.params();
  std::vector<double> cat(e);
  cat.insert(cat.end(), e.begin(), e.end());
  const auto q = oracle::affine(p.get("fuse.weight"), p.get("fuse.bias"), cat);
  const auto v = oracle::affine(p.get("cross_attn.v.weight"), p.get("cross_attn.v.bias"), e);
  const auto o = oracle::affine(p.get("cross_attn.o.weight"), p.get("cross_attn.o.bias"), v);
  std::vector<double> z(8);
  for (std::size_t i = 0; i < 8; ++i) z[i] = q[i] + o[i];
  const auto want = oracle::head(p, z);
  const auto got = m.forward_embeddings(ve);
  for (std::size_t i = 0; i < kNumClasses; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-12);
}

TEST_CASE("auxiliary slots are exchangeable") {
  Rng rng(12);
  const FusionModel m(tiny(Arch::multiview_self_cross, 2));
  ViewEmbeddings ve;
  ve.presence = kAllViews;
  for (auto& v : ve.views) v = random_vec(rng, 8);
  const auto base = m.forward_embeddings(ve);
  std::swap(ve.views[kAugText], ve.views[kCaption]);
  std::swap(ve.views[kAugImage], ve.views[kCaption]);
  const auto perm = m.forward_embeddings(ve);
  for (std::size_t i = 0; i < kNumClasses; ++i) CHECK(std::abs(base[i] - perm[i]) < 1e-12);
}

TEST_CASE("early fusion ignores auxiliary views") {
  Rng rng(13);
  const FusionModel m(tiny(Arch::early_fusion));
  EncodedBundle b = random_bundle(rng, m.config(), kAllViews);
  const auto z = m.forward(b);
  b.presence = kOriginalsOnly;
  CHECK(m.forward(b) == z);
}

TEST_CASE("forward preconditions") {
  const FusionModel m(tiny(Arch::multiview_cross));
  Rng rng(14);
  EncodedBundle b = random_bundle(rng, m.config(), kAllViews);
  b.presence[kOrigImage] = false;
  CHECK_THROWS_AS(m.forward(b), std::invalid_argument);
  b = random_bundle(rng, m.config(), kAllViews);
  b.aug_text = {};
  CHECK_THROWS_AS(m.forward(b), std::invalid_argument);
  b = random_bundle(rng, m.config(), kOriginalsOnly);
  b.orig_image.features.pop_back();
  CHECK_THROWS_AS(m.forward(b), std::invalid_argument);
}

TEST_CASE("loss agrees with the oracle") {
  Rng rng(15);
  const FusionModel m(tiny(Arch::multiview_self_cross, 3));
  std::vector<Example> batch;
  for (int i = 0; i < 4; ++i) batch.push_back({random_bundle(rng, m.config(), kAllViews), rng.below(5)});
  CHECK(std::abs(m.loss(batch) - oracle::loss(m, batch)) < 1e-9);
  Parameters g = m.params().zeros_like();
  CHECK(m.loss_and_gradients(batch, g) == doctest::Approx(m.loss(batch)).epsilon(1e-14));
}

TEST_CASE("gradients match central differences for every architecture") {
  Rng rng(16);
  for (Arch a : {Arch::early_fusion, Arch::multiview_cross, Arch::multiview_self_cross}) {
    FusionModel m(tiny(a, 21));
    std::vector<Example> batch;
    for (int i = 0; i < 3; ++i) {
      Presence p = kOriginalsOnly;
      for (std::size_t s = 2; s < kNumViews; ++s) p[s] = i > 0 || s == kAugText;
      batch.push_back({random_bundle(rng, m.config(), p), rng.below(5)});
    }
    const auto r = gradcheck::run(m, batch);
    INFO("arch ", std::string(arch_name(a)), " worst ", r.worst_name, " at ", r.worst_index);
    CHECK(r.max_rel_error < 1e-3);
    CHECK(r.checked == m.params().scalar_count());
  }
}

TEST_CASE("gradient of a parameter reached only through a masked view is exactly zero") {
  FusionModel m(tiny(Arch::multiview_self_cross, 5));
  EncodedBundle b;
  b.orig_text.buckets = {1, 2};
  b.orig_image.features.assign(m.config().image_input_dim(), 0.3);
  b.aug_text.buckets = {9, 10};
  b.caption.buckets = {11};
  b.presence = kOriginalsOnly;
  std::vector<Example> batch = {{b, 2}};
  Parameters g = m.params().zeros_like();
  m.loss_and_gradients(batch, g);
  const Tensor& ge = g.get("text.embedding");
  for (std::size_t row : {9u, 10u, 11u, 0u, 15u}) {
    for (std::size_t c = 0; c < ge.cols; ++c) CHECK(ge.at(row, c) == 0.0);
  }
  double used = 0;
  for (std::size_t c = 0; c < ge.cols; ++c) used += std::abs(ge.at(1, c));
  CHECK(used > 0.0);
}

TEST_CASE("a confidently correct model has a near-zero gradient") {
  FusionModel m(tiny(Arch::early_fusion));
  auto& w2 = m.params().get("head.fc2.weight").data;
  std::fill(w2.begin(), w2.end(), 0.0);
  auto& b2 = m.params().get("head.fc2.bias").data;
  std::fill(b2.begin(), b2.end(), 0.0);
  b2[3] = 60.0;
  Rng rng(17);
  std::vector<Example> batch = {{random_bundle(rng, m.config(), kOriginalsOnly), 3}};
  Parameters g = m.params().zeros_like();
  const double l = m.loss_and_gradients(batch, g);
  CHECK(l < 1e-20);
  double norm2 = 0;
  for (const Tensor& t : g)
    for (double v : t.data) norm2 += v * v;
  CHECK(std::sqrt(norm2) < 1e-20);
}

TEST_CASE("checkpoints round trip through float32") {
  testutil::TempDir dir;
  const FusionModel m(tiny(Arch::multiview_self_cross, 9));
  save_checkpoint(m, dir / "m.bin", {{"epoch", 3}});
  const auto loaded = load_checkpoint(dir / "m.bin");
  CHECK(loaded.metadata["epoch"] == 3);
  CHECK(loaded.model.config().to_json() == m.config().to_json());
  for (std::size_t k = 0; k < m.params().size(); ++k) {
    const auto& a = m.params()[k].data;
    const auto& b = loaded.model.params()[k].data;
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == static_cast<double>(static_cast<float>(a[i])));
  }
  Rng rng(18);
  const auto bundle = random_bundle(rng, m.config(), kAllViews);
  const auto z0 = m.forward(bundle), z1 = loaded.model.forward(bundle);
  for (std::size_t i = 0; i < kNumClasses; ++i) CHECK(std::abs(z0[i] - z1[i]) < 1e-5);

  // Saving the loaded model again reproduces the file byte for byte.
  save_checkpoint(loaded.model, dir / "again.bin", {{"epoch", 3}});
  CHECK(testutil::read_file(dir / "again.bin") == testutil::read_file(dir / "m.bin"));
}

TEST_CASE("corrupt checkpoints are data errors") {
  testutil::TempDir dir;
  testutil::write_file(dir / "bad.bin", "NOTACKPT0000000000000000");
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.bin"), DataError);
  const FusionModel m(tiny(Arch::early_fusion));
  save_checkpoint(m, dir / "m.bin");
  std::string bytes = testutil::read_file(dir / "m.bin");
  bytes.resize(bytes.size() - 10);
  testutil::write_file(dir / "short.bin", bytes);
  CHECK_THROWS_AS(load_checkpoint(dir / "short.bin"), DataError);
  bytes = testutil::read_file(dir / "m.bin");
  bytes[8] = 7;
  testutil::write_file(dir / "ver.bin", bytes);
  CHECK_THROWS_AS(load_checkpoint(dir / "ver.bin"), DataError);
}

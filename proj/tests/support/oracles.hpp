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

// Reference implementations used only by tests. Each one is written
// independently of the library code it checks: different algorithms where
// possible, plain scalar loops otherwise.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "crisisaug/fusion_models.hpp"
#include "crisisaug/image.hpp"

namespace oracle {

// --- sequences -----------------------------------------------------------------

/// Longest common subsequence by enumerating every subsequence of `a`
/// (exponential; |a| <= 16).
inline std::size_t lcs_brute(const std::vector<std::string>& a,
                             const std::vector<std::string>& b) {
  const std::size_t n = a.size();
  std::size_t best = 0;
  for (unsigned long mask = 0; mask < (1UL << n); ++mask) {
    const std::size_t len = static_cast<std::size_t>(__builtin_popcountl(mask));
    if (len <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask & (1UL << i))) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) ok = false;
      else ++j;
    }
    if (ok) best = len;
  }
  return best;
}

/// Top-down memoized recursion over suffixes, a full table.
inline std::size_t lcs_memo(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<int>> memo(a.size() + 1, std::vector<int>(b.size() + 1, -1));
  std::function<int(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> int {
    if (i == a.size() || j == b.size()) return 0;
    int& m = memo[i][j];
    if (m >= 0) return m;
    if (a[i] == b[j]) m = 1 + go(i + 1, j + 1);
    else m = std::max(go(i + 1, j), go(i, j + 1));
    return m;
  };
  // Fill bottom-right first so recursion depth stays bounded.
  for (std::size_t i = a.size(); i-- > 0;) {
    for (std::size_t j = b.size(); j-- > 0;) go(i, j);
  }
  return static_cast<std::size_t>(go(0, 0));
}

struct Prf {
  double p, r, f;
};

inline Prf rouge_from_lcs(std::size_t lcs, std::size_t ref_len, std::size_t cand_len) {
  if (lcs == 0) return {0.0, 0.0, 0.0};
  const double p = static_cast<double>(lcs) / static_cast<double>(cand_len);
  const double r = static_cast<double>(lcs) / static_cast<double>(ref_len);
  return {p, r, 2.0 * p * r / (p + r)};
}

// --- classification metrics ----------------------------------------------------

/// Per-class counts gathered sample by sample; F1 = 2TP / (2TP + FP + FN).
inline double weighted_f1(const std::vector<std::size_t>& t, const std::vector<std::size_t>& p,
                          std::size_t classes = 5) {
  double total = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    double tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] == c) ++support;
      if (t[i] == c && p[i] == c) ++tp;
      if (t[i] != c && p[i] == c) ++fp;
      if (t[i] == c && p[i] != c) ++fn;
    }
    const double f1 = tp > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
    total += support * f1;
  }
  return total / static_cast<double>(t.size());
}

inline double accuracy(const std::vector<std::size_t>& t, const std::vector<std::size_t>& p) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < t.size(); ++i) hits += t[i] == p[i];
  return static_cast<double>(hits) / static_cast<double>(t.size());
}

// --- vectors -----------------------------------------------------------------

inline long double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  long double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<long double>(u[i]) * v[i];
    nu += static_cast<long double>(u[i]) * u[i];
    nv += static_cast<long double>(v[i]) * v[i];
  }
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

// --- images ------------------------------------------------------------------

/// Bilinear resampling with half-pixel centers and edge clamping, evaluated
/// directly from the four-neighbour formula.
inline crisisaug::Image bilinear(const crisisaug::Image& src, std::size_t h, std::size_t w) {
  crisisaug::Image out(h, w);
  const double sy = static_cast<double>(src.height()) / static_cast<double>(h);
  const double sx = static_cast<double>(src.width()) / static_cast<double>(w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
      double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
      fy = std::clamp(fy, 0.0, static_cast<double>(src.height() - 1));
      fx = std::clamp(fx, 0.0, static_cast<double>(src.width() - 1));
      const auto y0 = static_cast<std::size_t>(std::floor(fy));
      const auto x0 = static_cast<std::size_t>(std::floor(fx));
      const std::size_t y1 = std::min(y0 + 1, src.height() - 1);
      const std::size_t x1 = std::min(x0 + 1, src.width() - 1);
      const double ty = fy - static_cast<double>(y0);
      const double tx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        out.at(y, x, c) = (1 - ty) * (1 - tx) * src.at(y0, x0, c) + (1 - ty) * tx * src.at(y0, x1, c) +
                          ty * (1 - tx) * src.at(y1, x0, c) + ty * tx * src.at(y1, x1, c);
      }
    }
  }
  return out;
}

// --- neural forward pass -------------------------------------------------------

using Vec = std::vector<double>;

inline Vec affine(const crisisaug::fusion::Tensor& w, const crisisaug::fusion::Tensor& b,
                  const Vec& x) {
  Vec y(w.rows, 0.0);
  for (std::size_t r = 0; r < w.rows; ++r) {
    double s = b.data[r];
    for (std::size_t c = 0; c < w.cols; ++c) s += w.data[r * w.cols + c] * x[c];
    y[r] = s;
  }
  return y;
}

/// Multi-head attention of one query over a key set; masked keys are skipped.
inline Vec mha(const std::vector<double>& wq, const std::vector<double>& bq,
               const std::vector<double>& wk, const std::vector<double>& bk,
               const std::vector<double>& wv, const std::vector<double>& bv,
               const std::vector<double>& wo, const std::vector<double>& bo, std::size_t d,
               std::size_t heads, const Vec& query, const std::vector<Vec>& keys,
               const std::vector<Vec>& values, const std::vector<bool>& mask,
               std::vector<std::vector<double>>* weights_out = nullptr) {
  auto lin = [d](const std::vector<double>& w, const std::vector<double>& b, const Vec& x) {
    Vec y(d);
    for (std::size_t r = 0; r < d; ++r) {
      double s = b[r];
      for (std::size_t c = 0; c < d; ++c) s += w[r * d + c] * x[c];
      y[r] = s;
    }
    return y;
  };
  const Vec q = lin(wq, bq, query);
  std::vector<Vec> k, v;
  for (std::size_t j = 0; j < keys.size(); ++j) {
    k.push_back(lin(wk, bk, keys[j]));
    v.push_back(lin(wv, bv, values[j]));
  }
  const std::size_t dh = d / heads;
  Vec concat(d, 0.0);
  if (weights_out) weights_out->assign(heads, std::vector<double>(keys.size(), 0.0));
  for (std::size_t h = 0; h < heads; ++h) {
    std::vector<double> s(keys.size(), 0.0);
    double top = -INFINITY;
    for (std::size_t j = 0; j < keys.size(); ++j) {
      if (!mask[j]) continue;
      double dot = 0;
      for (std::size_t t = h * dh; t < (h + 1) * dh; ++t) dot += q[t] * k[j][t];
      s[j] = dot / std::sqrt(static_cast<double>(dh));
      top = std::max(top, s[j]);
    }
    double z = 0;
    for (std::size_t j = 0; j < keys.size(); ++j) {
      if (mask[j]) z += std::exp(s[j] - top);
    }
    for (std::size_t j = 0; j < keys.size(); ++j) {
      if (!mask[j]) continue;
      const double a = std::exp(s[j] - top) / z;
      if (weights_out) (*weights_out)[h][j] = a;
      for (std::size_t t = h * dh; t < (h + 1) * dh; ++t) concat[t] += a * v[j][t];
    }
  }
  return lin(wo, bo, concat);
}

inline Vec mha_named(const crisisaug::fusion::Parameters& p, const std::string& prefix,
                     std::size_t d, std::size_t heads, const Vec& query,
                     const std::vector<Vec>& keys, const std::vector<bool>& mask) {
  auto g = [&](const char* s) { return p.get(prefix + s).data; };
  return mha(g(".q.weight"), g(".q.bias"), g(".k.weight"), g(".k.bias"), g(".v.weight"),
             g(".v.bias"), g(".o.weight"), g(".o.bias"), d, heads, query, keys, keys, mask);
}

inline Vec text_embedding(const crisisaug::fusion::FusionModel& m,
                          const crisisaug::fusion::TextInput& in) {
  const auto& p = m.params();
  Vec pooled;
  if (m.config().text_encoder == crisisaug::fusion::EncoderKind::toy) {
    const auto& e = p.get("text.embedding");
    pooled.assign(e.cols, 0.0);
    for (std::size_t c = 0; c < e.cols; ++c) {
      double s = 0;
      for (std::uint32_t b : in.buckets) s += e.data[b * e.cols + c];
      pooled[c] = s / static_cast<double>(in.buckets.size());
    }
  } else {
    pooled = in.features;
  }
  return affine(p.get("text.proj.weight"), p.get("text.proj.bias"), pooled);
}

inline Vec image_embedding(const crisisaug::fusion::FusionModel& m,
                           const crisisaug::fusion::ImageInput& in) {
  return affine(m.params().get("image.proj.weight"), m.params().get("image.proj.bias"),
                in.features);
}

inline crisisaug::fusion::Logits head(const crisisaug::fusion::Parameters& p, const Vec& x) {
  Vec h = affine(p.get("head.fc1.weight"), p.get("head.fc1.bias"), x);
  for (double& v : h) v = std::tanh(v);
  const Vec o = affine(p.get("head.fc2.weight"), p.get("head.fc2.bias"), h);
  crisisaug::fusion::Logits out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = o[i];
  return out;
}

/// Logits from per-view embeddings, following the documented architecture.
inline crisisaug::fusion::Logits forward_embeddings(const crisisaug::fusion::FusionModel& m,
                                                    std::vector<Vec> x,
                                                    const crisisaug::fusion::Presence& presence) {
  using crisisaug::fusion::Arch;
  const auto& p = m.params();
  const std::size_t d = m.config().d;
  Vec cat(x[0]);
  cat.insert(cat.end(), x[1].begin(), x[1].end());
  if (m.config().arch == Arch::early_fusion) return head(p, cat);
  const Vec q = affine(p.get("fuse.weight"), p.get("fuse.bias"), cat);
  const std::vector<bool> mask(presence.begin(), presence.end());
  if (m.config().arch == Arch::multiview_self_cross) {
    std::vector<Vec> y = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const Vec a = mha_named(p, "self_attn", d, m.config().heads, x[i], x, mask);
      for (std::size_t t = 0; t < d; ++t) y[i][t] += a[t];
    }
    x = std::move(y);
  }
  const Vec a = mha_named(p, "cross_attn", d, m.config().heads, q, x, mask);
  Vec z(d);
  for (std::size_t t = 0; t < d; ++t) z[t] = q[t] + a[t];
  return head(p, z);
}

inline crisisaug::fusion::Logits forward(const crisisaug::fusion::FusionModel& m,
                                         const crisisaug::fusion::EncodedBundle& b) {
  using namespace crisisaug::fusion;
  Presence presence = m.config().arch == Arch::early_fusion ? kOriginalsOnly : b.presence;
  const std::size_t d = m.config().d;
  std::vector<Vec> x(kNumViews, Vec(d, 0.0));
  x[kOrigText] = text_embedding(m, b.orig_text);
  x[kOrigImage] = image_embedding(m, b.orig_image);
  if (presence[kAugText]) x[kAugText] = text_embedding(m, b.aug_text);
  if (presence[kAugImage]) x[kAugImage] = image_embedding(m, b.aug_image);
  if (presence[kCaption]) x[kCaption] = text_embedding(m, b.caption);
  return forward_embeddings(m, std::move(x), presence);
}

/// Mean softmax cross-entropy computed from oracle logits.
inline double loss(const crisisaug::fusion::FusionModel& m,
                   const std::vector<crisisaug::fusion::Example>& batch) {
  double total = 0;
  for (const auto& ex : batch) {
    const auto z = forward(m, ex.bundle);
    const double top = *std::max_element(z.begin(), z.end());
    double s = 0;
    for (double v : z) s += std::exp(v - top);
    total += std::log(s) + top - z[ex.label];
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace oracle

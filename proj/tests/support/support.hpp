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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "crisisaug/data_model.hpp"
#include "crisisaug/image.hpp"
#include "crisisaug/random.hpp"

namespace testutil {

/// A fresh directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "crisisaug-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline crisisaug::MultimodalSample sample(std::string id, std::string text,
                                          crisisaug::HumanitarianLabel label,
                                          crisisaug::Split split = crisisaug::Split::train) {
  crisisaug::MultimodalSample s;
  s.sample_id = std::move(id);
  s.tweet_text = std::move(text);
  s.image_ref = "images/" + s.sample_id + ".png";
  s.label = label;
  s.split = split;
  return s;
}

/// Pixels on the 8-bit grid, as decoded images are.
inline crisisaug::Image random_image(crisisaug::Rng& rng, std::size_t h, std::size_t w) {
  crisisaug::Image img(h, w);
  for (double& v : img.pixels()) v = static_cast<double>(rng.below(256)) / 255.0;
  return img;
}

/// Arbitrary doubles in [0, 1].
inline crisisaug::Image random_real_image(crisisaug::Rng& rng, std::size_t h, std::size_t w) {
  crisisaug::Image img(h, w);
  for (double& v : img.pixels()) v = rng.uniform();
  return img;
}

inline std::vector<std::string> random_tokens(crisisaug::Rng& rng, std::size_t n,
                                              std::size_t alphabet) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("t" + std::to_string(rng.below(alphabet)));
  return out;
}

inline std::string random_text(crisisaug::Rng& rng, std::size_t max_tokens = 12) {
  static const char* kWords[] = {"flood", "help", "#Harvey", "rescue", "people", "water",
                                 "damage", "road", "donate", "now", "RT", "@user", "🙏", "in",
                                 "the", "shelter"};
  const std::size_t n = 1 + rng.below(max_tokens);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += kWords[rng.below(std::size(kWords))];
  }
  return out;
}

}  // namespace testutil

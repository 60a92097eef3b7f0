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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace crisisaug {

/// H x W x 3 image with interleaved channels, values in [0, 1].
class Image {
 public:
  static constexpr std::size_t kChannels = 3;

  Image() = default;
  /// Zero-filled. Throws std::invalid_argument for zero dimensions.
  Image(std::size_t height, std::size_t width);
  /// Takes ownership of interleaved pixel data; throws std::invalid_argument
  /// on size mismatch or any value outside [0, 1] (NaN included).
  Image(std::size_t height, std::size_t width, std::vector<double> pixels);

  static Image filled(std::size_t height, std::size_t width, double r, double g,
                      double b);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels_[(y * width_ + x) * kChannels + c];
  }
  double& at(std::size_t y, std::size_t x, std::size_t c) {
    return pixels_[(y * width_ + x) * kChannels + c];
  }

  std::span<const double> pixels() const { return pixels_; }
  std::span<double> pixels() { return pixels_; }

  bool same_shape(const Image& o) const {
    return height_ == o.height_ && width_ == o.width_;
  }
  bool in_range() const;

  /// Bit-exact equality of shape and every channel value.
  friend bool operator==(const Image& a, const Image& b);

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> pixels_;
};

/// 8-bit quantization with round-half-up: floor(v * 255 + 0.5).
std::uint8_t quantize_u8(double v);

/// Decodes any PNG libpng understands into 8-bit RGB normalized to [0, 1].
/// Gray is expanded, alpha dropped, 16-bit stripped. Throws DataError.
Image load_png(const std::filesystem::path& path);
/// Lossless 8-bit RGB PNG. Throws DataError on I/O failure.
void save_png(const Image& img, const std::filesystem::path& path);

/// 8-bit RGB round trip helpers, row-major interleaved.
std::vector<std::uint8_t> to_rgb8(const Image& img);
Image from_rgb8(std::size_t height, std::size_t width,
                std::span<const std::uint8_t> rgb);

}  // namespace crisisaug

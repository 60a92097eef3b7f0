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

#include "crisisaug/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>

#include "crisisaug/error.hpp"

namespace crisisaug {

Image::Image(std::size_t height, std::size_t width)
    : height_(height), width_(width), pixels_(height * width * kChannels, 0.0) {
  if (height == 0 || width == 0) throw std::invalid_argument("image dimensions must be >= 1");
}

Image::Image(std::size_t height, std::size_t width, std::vector<double> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (height == 0 || width == 0) throw std::invalid_argument("image dimensions must be >= 1");
  if (pixels_.size() != height * width * kChannels) {
    throw std::invalid_argument("pixel buffer does not match image dimensions");
  }
  if (!in_range()) throw std::invalid_argument("pixel value outside [0, 1]");
}

Image Image::filled(std::size_t height, std::size_t width, double r, double g, double b) {
  Image img(height, width);
  for (std::size_t i = 0; i < img.pixels_.size(); i += kChannels) {
    img.pixels_[i] = r;
    img.pixels_[i + 1] = g;
    img.pixels_[i + 2] = b;
  }
  if (!img.in_range()) throw std::invalid_argument("pixel value outside [0, 1]");
  return img;
}

bool Image::in_range() const {
  for (double v : pixels_) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
  }
  return true;
}

bool operator==(const Image& a, const Image& b) {
  if (!a.same_shape(b)) return false;
  return std::memcmp(a.pixels_.data(), b.pixels_.data(),
                     a.pixels_.size() * sizeof(double)) == 0;
}

std::uint8_t quantize_u8(double v) {
  const double scaled = std::floor(v * 255.0 + 0.5);
  if (scaled <= 0.0) return 0;
  if (scaled >= 255.0) return 255;
  return static_cast<std::uint8_t>(scaled);
}

std::vector<std::uint8_t> to_rgb8(const Image& img) {
  std::vector<std::uint8_t> out(img.size());
  const auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) out[i] = quantize_u8(px[i]);
  return out;
}

Image from_rgb8(std::size_t height, std::size_t width, std::span<const std::uint8_t> rgb) {
  if (rgb.size() != height * width * Image::kChannels) {
    throw std::invalid_argument("rgb8 buffer does not match image dimensions");
  }
  std::vector<double> px(rgb.size());
  for (std::size_t i = 0; i < rgb.size(); ++i) px[i] = rgb[i] / 255.0;
  return Image(height, width, std::move(px));
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image load_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw DataError("cannot open image '" + path.string() + "'");

  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_stdio(&image, fp.get())) {
    throw DataError("cannot decode PNG '" + path.string() + "': " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError("cannot decode PNG '" + path.string() + "': " + image.message);
  }
  return from_rgb8(image.height, image.width, buffer);
}

void save_png(const Image& img, const std::filesystem::path& path) {
  if (img.empty()) throw DataError("cannot save an empty image");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::vector<std::uint8_t> rgb = to_rgb8(img);

  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, rgb.data(), 0, nullptr)) {
    throw DataError("cannot write PNG '" + path.string() + "': " + image.message);
  }
}

}  // namespace crisisaug

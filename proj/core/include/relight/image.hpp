#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "relight/vec3.hpp"

namespace relight {

enum class ColorSpace { LinearRgb, Srgb, Lab, Scalar };

std::string_view to_string(ColorSpace space);

// Planar-interleaved float image: row-major, top row first, channels
// interleaved per pixel.
class ImageF {
 public:
  ImageF() = default;
  ImageF(int width, int height, int channels, ColorSpace space, float fill = 0.0f);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  ColorSpace space() const noexcept { return space_; }
  void set_space(ColorSpace space) noexcept { space_ = space; }

  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return data_.empty(); }

  float& at(int x, int y, int c) noexcept { return data_[index(x, y, c)]; }
  float at(int x, int y, int c) const noexcept { return data_[index(x, y, c)]; }

  std::span<float> pixel(int x, int y) noexcept {
    return {data_.data() + index(x, y, 0), static_cast<std::size_t>(channels_)};
  }
  std::span<const float> pixel(int x, int y) const noexcept {
    return {data_.data() + index(x, y, 0), static_cast<std::size_t>(channels_)};
  }

  Rgb rgb(int x, int y) const noexcept {
    const float* p = data_.data() + index(x, y, 0);
    return {p[0], p[1], p[2]};
  }
  void set_rgb(int x, int y, const Rgb& v) noexcept {
    float* p = data_.data() + index(x, y, 0);
    p[0] = v.r;
    p[1] = v.g;
    p[2] = v.b;
  }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  bool same_shape(const ImageF& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }

  bool operator==(const ImageF&) const = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  ColorSpace space_ = ColorSpace::Scalar;
  std::vector<float> data_;
};

// Per-pixel gate in [0, 1]; values are clamped on write.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, float fill = 0.0f);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float at(int x, int y) const noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  void set(int x, int y, float v) noexcept;

  std::span<const float> data() const noexcept { return data_; }

  double sum() const noexcept;
  bool any() const noexcept;

  bool matches(const ImageF& img) const noexcept {
    return width_ == img.width() && height_ == img.height();
  }

  bool operator==(const Mask&) const = default;

  // Channel 0 of `img` clamped to [0, 1].
  static Mask from_image(const ImageF& img);
  ImageF to_image() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

// Throws ContractError unless every sample is finite.
void require_finite(const ImageF& img, const char* what);

}  // namespace relight

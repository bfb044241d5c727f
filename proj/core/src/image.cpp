#include "relight/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "relight/error.hpp"

namespace relight {

std::string_view to_string(ColorSpace space) {
  switch (space) {
    case ColorSpace::LinearRgb:
      return "linear-rgb";
    case ColorSpace::Srgb:
      return "srgb";
    case ColorSpace::Lab:
      return "lab";
    case ColorSpace::Scalar:
      return "scalar";
  }
  return "unknown";
}

ImageF::ImageF(int width, int height, int channels, ColorSpace space, float fill)
    : width_(width), height_(height), channels_(channels), space_(space) {
  require(width > 0 && height > 0, "image dimensions must be positive");
  require(channels >= 1 && channels <= 4, "image channels must be in 1..4");
  require(space != ColorSpace::Lab || channels == 3, "lab images have 3 channels");
  data_.assign(pixel_count() * static_cast<std::size_t>(channels), fill);
}

Mask::Mask(int width, int height, float fill) : width_(width), height_(height) {
  require(width > 0 && height > 0, "mask dimensions must be positive");
  data_.assign(static_cast<std::size_t>(width) * height, std::clamp(fill, 0.0f, 1.0f));
}

void Mask::set(int x, int y, float v) noexcept {
  data_[static_cast<std::size_t>(y) * width_ + x] = std::isfinite(v) ? std::clamp(v, 0.0f, 1.0f) : 0.0f;
}

double Mask::sum() const noexcept {
  double s = 0;
  for (float v : data_) s += v;
  return s;
}

bool Mask::any() const noexcept {
  return std::any_of(data_.begin(), data_.end(), [](float v) { return v > 0.0f; });
}

Mask Mask::from_image(const ImageF& img) {
  Mask m(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) m.set(x, y, img.at(x, y, 0));
  return m;
}

ImageF Mask::to_image() const {
  ImageF img(width_, height_, 1, ColorSpace::Scalar);
  std::copy(data_.begin(), data_.end(), img.data().begin());
  return img;
}

void require_finite(const ImageF& img, const char* what) {
  for (float v : img.data()) {
    if (!std::isfinite(v)) throw ContractError(std::string(what) + ": non-finite sample");
  }
}

}  // namespace relight

#include "relight/color.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "relight/error.hpp"

namespace relight {
namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

// Linear sRGB primaries to XYZ, D65.
constexpr Mat3 kRgbToXyz = {{
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
}};

constexpr Mat3 invert(const Mat3& m) {
  const double c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
  const double c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
  const double c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
  const double det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
  const double inv = 1.0 / det;
  return {{
      {c00 * inv, (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv,
       (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv},
      {c01 * inv, (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv,
       (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv},
      {c02 * inv, (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv,
       (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv},
  }};
}

constexpr Mat3 kXyzToRgb = invert(kRgbToXyz);

constexpr std::array<double, 3> kWhite = {
    kRgbToXyz[0][0] + kRgbToXyz[0][1] + kRgbToXyz[0][2],
    kRgbToXyz[1][0] + kRgbToXyz[1][1] + kRgbToXyz[1][2],
    kRgbToXyz[2][0] + kRgbToXyz[2][1] + kRgbToXyz[2][2],
};

constexpr double kEpsilon = 216.0 / 24389.0;  // (6/29)^3
constexpr double kKappa = 24389.0 / 27.0;     // (29/3)^3

double lab_f(double t) { return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0; }

double lab_f_inv(double f) {
  const double f3 = f * f * f;
  return f3 > kEpsilon ? f3 : (116.0 * f - 16.0) / kKappa;
}

void require_space(const ImageF& img, ColorSpace space, int channels, const char* op) {
  if (img.space() != space || img.channels() < channels) {
    throw ContractError(std::string(op) + ": expected " + std::string(to_string(space)) +
                        " image, got " + std::string(to_string(img.space())));
  }
}

}  // namespace

float srgb_to_linear(float encoded) {
  const double c = encoded;
  return static_cast<float>(c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4));
}

float linear_to_srgb(float linear) {
  const double c = linear;
  return static_cast<float>(c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055);
}

ImageF srgb_to_linear(const ImageF& img) {
  require_space(img, ColorSpace::Srgb, 1, "srgb_to_linear");
  ImageF out = img;
  out.set_space(ColorSpace::LinearRgb);
  const int ch = img.channels();
  auto data = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    // Alpha stays linear.
    if (ch == 4 && i % 4 == 3) continue;
    data[i] = srgb_to_linear(data[i]);
  }
  return out;
}

ImageF linear_to_srgb(const ImageF& img) {
  require_space(img, ColorSpace::LinearRgb, 1, "linear_to_srgb");
  ImageF out = img;
  out.set_space(ColorSpace::Srgb);
  const int ch = img.channels();
  auto data = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const float v = std::isfinite(data[i]) ? std::clamp(data[i], 0.0f, 1.0f) : 0.0f;
    data[i] = (ch == 4 && i % 4 == 3) ? v : linear_to_srgb(v);
  }
  return out;
}

std::array<double, 3> rgb_to_lab(double r, double g, double b) {
  const double X = kRgbToXyz[0][0] * r + kRgbToXyz[0][1] * g + kRgbToXyz[0][2] * b;
  const double Y = kRgbToXyz[1][0] * r + kRgbToXyz[1][1] * g + kRgbToXyz[1][2] * b;
  const double Z = kRgbToXyz[2][0] * r + kRgbToXyz[2][1] * g + kRgbToXyz[2][2] * b;
  const double fx = lab_f(X / kWhite[0]);
  const double fy = lab_f(Y / kWhite[1]);
  const double fz = lab_f(Z / kWhite[2]);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

std::array<double, 3> lab_to_rgb(double L, double a, double b) {
  const double fy = (L + 16.0) / 116.0;
  const double fx = fy + a / 500.0;
  const double fz = fy - b / 200.0;
  const double X = kWhite[0] * lab_f_inv(fx);
  const double Y = kWhite[1] * lab_f_inv(fy);
  const double Z = kWhite[2] * lab_f_inv(fz);
  return {
      kXyzToRgb[0][0] * X + kXyzToRgb[0][1] * Y + kXyzToRgb[0][2] * Z,
      kXyzToRgb[1][0] * X + kXyzToRgb[1][1] * Y + kXyzToRgb[1][2] * Z,
      kXyzToRgb[2][0] * X + kXyzToRgb[2][1] * Y + kXyzToRgb[2][2] * Z,
  };
}

ImageF rgb_to_lab(const ImageF& img) {
  require_space(img, ColorSpace::LinearRgb, 3, "rgb_to_lab");
  ImageF out(img.width(), img.height(), 3, ColorSpace::Lab);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto p = img.pixel(x, y);
      const auto lab = rgb_to_lab(std::max(0.0f, p[0]), std::max(0.0f, p[1]), std::max(0.0f, p[2]));
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<float>(lab[c]);
    }
  }
  return out;
}

ImageF lab_to_rgb(const ImageF& img) {
  require_space(img, ColorSpace::Lab, 3, "lab_to_rgb");
  ImageF out(img.width(), img.height(), 3, ColorSpace::LinearRgb);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto p = img.pixel(x, y);
      const auto rgb = lab_to_rgb(p[0], p[1], p[2]);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<float>(rgb[c]);
    }
  }
  return out;
}

Rgb parse_hex_color(std::string_view hex) {
  if (!hex.empty() && hex.front() == '#') hex.remove_prefix(1);
  if (hex.size() != 6) throw ContractError("color must be #RRGGBB: '" + std::string(hex) + "'");
  float v[3];
  for (int i = 0; i < 3; ++i) {
    unsigned int byte = 0;
    const auto* first = hex.data() + 2 * i;
    const auto [ptr, ec] = std::from_chars(first, first + 2, byte, 16);
    if (ec != std::errc{} || ptr != first + 2) {
      throw ContractError("color must be #RRGGBB: '" + std::string(hex) + "'");
    }
    v[i] = static_cast<float>(byte) / 255.0f;
  }
  return {v[0], v[1], v[2]};
}

}  // namespace relight

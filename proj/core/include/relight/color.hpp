#pragma once

#include <array>
#include <string_view>

#include "relight/image.hpp"

namespace relight {

// sRGB transfer function (IEC 61966-2-1), per channel.
float srgb_to_linear(float encoded);
float linear_to_srgb(float linear);

ImageF srgb_to_linear(const ImageF& img);
// Clamps to [0, 1] before encoding; this is the display encode.
ImageF linear_to_srgb(const ImageF& img);

// CIE L*a*b* relative to the D65 white of linear sRGB (2 degree observer).
// The white is taken as the XYZ image of rgb (1, 1, 1), so linear white maps
// to (100, 0, 0) exactly. Values outside the sRGB gamut pass through.
std::array<double, 3> rgb_to_lab(double r, double g, double b);
std::array<double, 3> lab_to_rgb(double L, double a, double b);

ImageF rgb_to_lab(const ImageF& img);
ImageF lab_to_rgb(const ImageF& img);

// "#RRGGBB" or "RRGGBB" to sRGB-encoded floats in [0, 1].
Rgb parse_hex_color(std::string_view hex);

}  // namespace relight

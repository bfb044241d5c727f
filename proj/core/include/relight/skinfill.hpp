#pragma once

#include <optional>
#include <string_view>

#include "relight/image.hpp"
#include "relight/vec3.hpp"

namespace relight::skin {

// T = skin * v, broadcast over channels.
struct ToneMap {
  ImageF map;  // linear RGB
  Rgb color;   // v, linear
};

// Mask-weighted mean per channel. Throws ContractError on an empty mask.
Rgb mean_skin_color(const ImageF& albedo, const Mask& skin);

ToneMap make_tone_map(const Mask& skin, const Rgb& color);

struct ToneShiftReport {
  Rgb old_mean;
  Rgb new_mean;                // mask-weighted mean of the output before clamping
  std::size_t clamped = 0;     // samples raised to zero
};

// out = albedo - skin * mean_skin_color(albedo, skin) + T, clamped to >= 0.
// Pixels with skin = 0 are copied unchanged. For a hard mask the output's
// masked mean is exactly T.color; a soft mask scales the shift by its value.
ImageF apply_tone_shift(const ImageF& albedo, const ToneMap& tone, const Mask& skin,
                        ToneShiftReport* report = nullptr);

// Returns the albedo unchanged when no tone is given.
ImageF apply_skin_tone(const ImageF& albedo, const Mask& skin, const std::optional<Rgb>& linear_tone,
                       ToneShiftReport* report = nullptr);

// "#C68E6E" style sRGB hex to linear RGB.
Rgb tone_from_hex(std::string_view hex);

}  // namespace relight::skin

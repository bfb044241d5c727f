#include "relight/skinfill.hpp"

#include <algorithm>

#include "relight/color.hpp"
#include "relight/error.hpp"

namespace relight::skin {
namespace {

std::array<double, 3> masked_mean(const ImageF& img, const Mask& m) {
  double acc[3] = {0, 0, 0}, total = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double w = m.at(x, y);
      if (w <= 0) continue;
      total += w;
      for (int c = 0; c < 3; ++c) acc[c] += w * img.at(x, y, c);
    }
  if (!(total > 0)) throw ContractError("skin mask is empty");
  return {acc[0] / total, acc[1] / total, acc[2] / total};
}

void check(const ImageF& albedo, const Mask& skin, const char* what) {
  require(albedo.channels() == 3, std::string(what) + ": albedo must have 3 channels");
  require(skin.matches(albedo), std::string(what) + ": skin mask size differs from albedo");
}

}  // namespace

Rgb mean_skin_color(const ImageF& albedo, const Mask& skin) {
  check(albedo, skin, "mean_skin_color");
  const auto m = masked_mean(albedo, skin);
  return {static_cast<float>(m[0]), static_cast<float>(m[1]), static_cast<float>(m[2])};
}

ToneMap make_tone_map(const Mask& skin, const Rgb& color) {
  require(!skin.empty(), "make_tone_map: empty mask");
  ToneMap t{ImageF(skin.width(), skin.height(), 3, ColorSpace::LinearRgb), color};
  for (int y = 0; y < skin.height(); ++y)
    for (int x = 0; x < skin.width(); ++x) {
      const float m = skin.at(x, y);
      t.map.set_rgb(x, y, {m * color.r, m * color.g, m * color.b});
    }
  return t;
}

ImageF apply_tone_shift(const ImageF& albedo, const ToneMap& tone, const Mask& skin, ToneShiftReport* report) {
  check(albedo, skin, "apply_tone_shift");
  require(tone.map.same_shape(albedo), "apply_tone_shift: tone map size differs from albedo");
  const auto mean = masked_mean(albedo, skin);
  ImageF out = albedo;
  ToneShiftReport rep;
  rep.old_mean = {static_cast<float>(mean[0]), static_cast<float>(mean[1]), static_cast<float>(mean[2])};
  double acc[3] = {0, 0, 0}, total = 0;
  for (int y = 0; y < albedo.height(); ++y)
    for (int x = 0; x < albedo.width(); ++x) {
      const double m = skin.at(x, y);
      if (m <= 0) continue;
      total += m;
      for (int c = 0; c < 3; ++c) {
        const double v = albedo.at(x, y, c) - m * mean[c] + tone.map.at(x, y, c);
        acc[c] += m * v;
        if (v < 0) ++rep.clamped;
        out.at(x, y, c) = static_cast<float>(std::max(0.0, v));
      }
    }
  rep.new_mean = {static_cast<float>(acc[0] / total), static_cast<float>(acc[1] / total),
                  static_cast<float>(acc[2] / total)};
  if (report) *report = rep;
  return out;
}

ImageF apply_skin_tone(const ImageF& albedo, const Mask& skin, const std::optional<Rgb>& linear_tone,
                       ToneShiftReport* report) {
  if (!linear_tone) return albedo;
  return apply_tone_shift(albedo, make_tone_map(skin, *linear_tone), skin, report);
}

Rgb tone_from_hex(std::string_view hex) {
  const Rgb s = parse_hex_color(hex);
  return {srgb_to_linear(s.r), srgb_to_linear(s.g), srgb_to_linear(s.b)};
}

}  // namespace relight::skin

#pragma once

#include <span>
#include <vector>

#include "relight/codec.hpp"
#include "relight/image.hpp"
#include "relight/rng.hpp"
#include "relight/vec3.hpp"

namespace relight::env {

// Equirectangular HDR radiance panorama, linear RGB, width = 2 * height.
// Camera frame is Y-up, +Z forward. Column j spans longitude
// phi = 2 pi ((j + 0.5) / w - 0.5); row i spans latitude
// theta = pi (0.5 - (i + 0.5) / h), +pi/2 at the top row.
class EnvMap {
 public:
  EnvMap() = default;
  // Requires a 3-channel image with width == 2 * height and finite,
  // non-negative samples.
  explicit EnvMap(ImageF radiance);

  // Clamps negative samples to zero and tags the image linear; still requires
  // the equirectangular aspect ratio.
  static EnvMap from_radiance(ImageF radiance);
  static EnvMap constant(int height, const Rgb& value);

  int width() const noexcept { return radiance_.width(); }
  int height() const noexcept { return radiance_.height(); }
  bool empty() const noexcept { return radiance_.empty(); }
  const ImageF& radiance() const noexcept { return radiance_; }
  Rgb at(int row, int col) const noexcept { return radiance_.rgb(col, row); }

 private:
  ImageF radiance_;
};

Vec3 pixel_to_direction(int row, int col, int height, int width);

// Continuous pixel coordinates; pixel centers sit at integer values, so
// direction_to_pixel(pixel_to_direction(i, j)) == (i, j) up to rounding.
struct PixelCoord {
  double row = 0;
  double col = 0;
};
PixelCoord direction_to_pixel(const Vec3& dir, int height, int width);

// (2 pi / w) (pi / h) cos(theta_row).
double solid_angle(int row, int height, int width);

// Bilinear lookup with longitude wraparound and latitude clamp. Non-unit
// directions are normalized; the zero vector is a ContractError.
Rgb sample_bilinear(const EnvMap& env, const Vec3& dir);

enum class Lobe { Diffuse, Specular };

inline constexpr double kDefaultPhongExponent = 32.0;
inline constexpr int kDefaultIrradianceHeight = 32;

// Normalized cosine-lobe convolution evaluated at one direction:
//   sum L(w) k(d, w) dw / sum k(d, w) dw
// with k = max(0, d.w) for Diffuse and max(0, d.w)^exponent for Specular.
// The sum runs over s x s sub-cells of every environment pixel, each taking
// the pixel's radiance, with s = prefilter_subdivision(height).
Rgb prefilter_at(const EnvMap& env, Lobe lobe, double exponent, const Vec3& dir);

// ceil(48 / height), at least 1: sub-cells no taller than 1/48 of the
// latitude range, so narrow specular lobes are integrated over each pixel's
// footprint rather than sampled at its center.
int prefilter_subdivision(int env_height);

// prefilter_at evaluated at every pixel center of an out_h x 2 out_h map.
EnvMap prefilter(const EnvMap& env, Lobe lobe, double exponent, int out_h);

struct IrradiancePair {
  EnvMap diffuse;   // indexed by normal direction
  EnvMap specular;  // indexed by reflection direction
  double exponent = kDefaultPhongExponent;
};

IrradiancePair prefilter_pair(const EnvMap& env, double exponent = kDefaultPhongExponent,
                              int out_h = kDefaultIrradianceHeight);

// Shift longitude by `angle` radians (content at phi moves to phi + angle).
// Whole-column shifts are exact copies; fractional shifts interpolate the two
// neighboring columns linearly.
EnvMap rotate_yaw(const EnvMap& env, double angle);

// Radiance RGBE (.hdr). Reads flat and new-style RLE scanlines with the
// "-Y h +X w" orientation; writes RLE when the width allows it. Decoding uses
// v = m * 2^(e - 136), so (128, 128, 128, 129) is exactly 1.0.
EnvMap decode_radiance_hdr(std::span<const std::uint8_t> bytes);
Bytes encode_radiance_hdr(const EnvMap& env);

// Accepts .hdr or .pfm.
EnvMap read_env(const std::filesystem::path& path);
void write_env(const std::filesystem::path& path, const EnvMap& env);

// An ellipse drawn in (longitude, latitude) coordinates, radians. `feather`
// is the width of the linear edge ramp in normalized-radius units (0 = hard).
struct Ellipse {
  double phi = 0;
  double theta = 0;
  double radius_phi = 0.3;
  double radius_theta = 0.3;
  Rgb color{1, 1, 1};
  double feather = 0;
};

// Black canvas with each ellipse composited over the previous ones.
EnvMap synth_ellipse_env(int height, std::span<const Ellipse> ellipses);

struct EllipseRanges {
  int count_min = 1;
  int count_max = 4;
  double radius_min = 0.15;
  double radius_max = 0.6;
  double intensity_min = 0.5;
  double intensity_max = 4.0;
  double feather_min = 0.0;
  double feather_max = 0.5;
};

std::vector<Ellipse> random_ellipses(const EllipseRanges& ranges, Rng& rng);

}  // namespace relight::env

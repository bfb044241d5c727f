#pragma once

#include <filesystem>

#include "relight/envmap.hpp"
#include "relight/image.hpp"
#include "relight/vec3.hpp"

namespace relight {

// Camera-space unit normals (Y up, +Z toward the viewer) and the pixels where
// they are defined.
struct NormalMap {
  ImageF normals;  // 3 channels
  Mask valid;

  int width() const noexcept { return normals.width(); }
  int height() const noexcept { return normals.height(); }
  Vec3 at(int x, int y) const noexcept {
    return {normals.at(x, y, 0), normals.at(x, y, 1), normals.at(x, y, 2)};
  }
};

struct NormalCheck {
  std::size_t non_unit = 0;      // valid pixels with | |n| - 1 | > tolerance
  std::size_t back_facing = 0;   // valid pixels with n.z < 0
  double max_length_error = 0;
};

// Counts invariant violations over valid pixels without throwing.
NormalCheck check_normals(const NormalMap& n, double tolerance = 1e-3);

// Throws ContractError when shapes disagree or a valid normal is off the unit
// sphere by more than `tolerance`.
void validate_normals(const NormalMap& n, double tolerance = 1e-3);

// Normals from a 3-channel image. PNG samples v in [0, 1] decode as 2v - 1;
// float images are taken as-is. Pixels whose vector has zero length (below
// 0.5 for PNG, so quantized mid-gray counts as empty) are marked invalid, others are renormalized when `renormalize` is set.
NormalMap normals_from_image(const ImageF& img, bool from_unorm, bool renormalize = true);

// .pfm or .png; `valid` is optional (all nonzero-length normals otherwise).
NormalMap read_normals(const std::filesystem::path& path);
void write_normals(const std::filesystem::path& path, const NormalMap& n);

inline constexpr double kDiffuseWeight = 0.85;
inline constexpr double kSpecularWeight = 0.15;

// out = 0.85 diffuse(n) + 0.15 specular(reflect(view, n)); invalid pixels are 0.
ImageF phong_shade(const NormalMap& n, const env::IrradiancePair& irr, const Vec3& view = {0, 0, 1});

// albedo * shading per channel, linear light.
ImageF compose_relit(const ImageF& albedo, const ImageF& shading);

inline constexpr double kDelightEps = 1e-3;
inline constexpr float kDelightMax = 10.0f;

// image / max(shading, eps), clamped to [0, 10].
ImageF delight_baseline(const ImageF& image, const ImageF& shading, double eps = kDelightEps);

}  // namespace relight

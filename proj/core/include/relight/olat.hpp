#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "relight/envmap.hpp"
#include "relight/image.hpp"
#include "relight/shading.hpp"

namespace relight::olat {

struct LightRig {
  std::vector<Vec3> directions;  // unit, pointing from the subject toward the light
  std::vector<double> weights;   // steradians, summing to 4 pi

  std::size_t size() const noexcept { return directions.size(); }
};

inline constexpr int kDefaultLightCount = 160;
inline constexpr int kRigGridHeight = 128;

// Spherical Fibonacci directions. Each weight is the solid angle of the
// 128 x 256 direction-grid cells whose nearest light it is; grid cells use
// exact latitude-band areas, so the weights sum to 4 pi. A nonzero seed
// rotates the set about +Y by a random angle.
LightRig make_light_rig(int count = kDefaultLightCount, std::uint64_t seed = 0);

// Throws ContractError unless directions are unit, weights positive and the
// total is 4 pi within 1e-6.
void validate(const LightRig& rig);

// Directions rotated about +Y by `angle` (longitude increases); weights kept.
LightRig rotate_rig(const LightRig& rig, double angle);

// Index of the rig direction with the largest cosine to `dir`; ties go to the
// lower index.
std::size_t nearest_light(const LightRig& rig, const Vec3& dir);

enum class Geometry { Sphere, Heightfield };
enum class AlbedoKind { White, Constant, Checker, Noise };

Geometry parse_geometry(const std::string& name);
AlbedoKind parse_albedo(const std::string& name);
std::string to_string(Geometry g);
std::string to_string(AlbedoKind a);

struct SceneSpec {
  Geometry geometry = Geometry::Sphere;
  int width = 256;
  int height = 256;
  AlbedoKind albedo = AlbedoKind::White;
  Rgb color{0.6f, 0.45f, 0.35f};   // Constant, and first Checker color
  Rgb color2{0.3f, 0.3f, 0.35f};   // second Checker color
  int checker_px = 16;
  double exponent = env::kDefaultPhongExponent;
  std::uint64_t seed = 0;          // Noise albedo and Heightfield bumps
};

struct SceneAssets {
  NormalMap normals;
  Mask subject;
  ImageF albedo;  // linear RGB, zero outside the subject
};

// Sphere: inscribed disk of radius 0.45 min(w, h), orthographic view along
// +Z. Heightfield: an ellipsoidal dome (semi-axes 0.35 w, 0.45 h) carrying
// seeded Gaussian bumps; normals are analytic.
SceneAssets make_scene(const SceneSpec& spec);

struct OlatStack {
  LightRig rig;
  std::vector<ImageF> images;
  Mask subject;
  ImageF albedo_gt;
  NormalMap normals_gt;
  SceneSpec scene;
  // White-furnace normalizer: rig response of a white, front-facing point.
  double z = 1.0;

  int width() const noexcept { return subject.width(); }
  int height() const noexcept { return subject.height(); }
};

// Per-light reflectance with energy-normalized lobes,
//   I_k = albedo * (0.85 max(0, n.d)/pi + 0.15 (e+1)/(2 pi) max(0, r.d)^e),
// r the mirror of +Z about n, so sum_k weight_k I_k integrates the same
// normalized lobes the prefilter uses.
double reflectance(const Vec3& n, const Vec3& light, double exponent, const Vec3& view = {0, 0, 1});

OlatStack synth_olat(const SceneSpec& scene, const LightRig& rig);
OlatStack synth_olat(const SceneAssets& assets, const SceneSpec& scene, const LightRig& rig);

double white_furnace_normalizer(const LightRig& rig, double exponent);

// Nearest-light binning of the environment: weight_k = sum over env pixels
// assigned to light k of L * solid_angle.
std::vector<std::array<double, 3>> env_to_light_weights(const env::EnvMap& env, const LightRig& rig);

// (1 / z) sum_k weight_k * I_k, accumulated per pixel in double.
ImageF ibr_render(const OlatStack& stack, const env::EnvMap& env);
ImageF ibr_render(const OlatStack& stack, const std::vector<std::array<double, 3>>& weights);

}  // namespace relight::olat

#include <cmath>

#include "doctest.h"
#include "relight/codec.hpp"
#include "relight/error.hpp"
#include "relight/metrics.hpp"
#include "relight/olat.hpp"
#include "relight/shading.hpp"
#include "support.hpp"

using namespace relight;
using namespace relight::env;

namespace {

NormalMap flat_normals(int w, int h, const Vec3& n) {
  NormalMap m{ImageF(w, h, 3, ColorSpace::Scalar), Mask(w, h, 1.0f)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.normals.set_rgb(x, y, {float(n.x), float(n.y), float(n.z)});
  return m;
}

NormalMap sphere(int size) {
  olat::SceneSpec spec;
  spec.width = spec.height = size;
  return olat::make_scene(spec).normals;
}

// Brute-force normalized lobe integral over every env pixel.
double lobe(const EnvMap& env, const Vec3& d, double exponent, bool diffuse) {
  double acc = 0, norm = 0;
  for (int i = 0; i < env.height(); ++i)
    for (int j = 0; j < env.width(); ++j) {
      const Vec3 w = pixel_to_direction(i, j, env.height(), env.width());
      const double c = std::max(0.0, dot(d, w));
      const double k = (diffuse ? c : std::pow(c, exponent)) * solid_angle(i, env.height(), env.width());
      acc += k * env.at(i, j).r;
      norm += k;
    }
  return acc / norm;
}

}  // namespace

TEST_CASE("white furnace shading") {
  const auto irr = prefilter_pair(EnvMap::constant(32, {1, 1, 1}));
  const NormalMap n = sphere(64);
  const ImageF s = phong_shade(n, irr);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      if (n.valid.at(x, y) > 0) {
        for (int c = 0; c < 3; ++c) CHECK(s.at(x, y, c) == doctest::Approx(1.0).epsilon(1e-2));
      } else {
        CHECK(s.rgb(x, y) == Rgb{});
      }
    }
}

TEST_CASE("frontal normal under a frontal light") {
  ImageF rad(128, 64, 3, ColorSpace::LinearRgb);
  rad.set_rgb(64, 32, {1, 1, 1});
  rad.set_rgb(63, 32, {1, 1, 1});
  rad.set_rgb(64, 31, {1, 1, 1});
  rad.set_rgb(63, 31, {1, 1, 1});
  const EnvMap env(std::move(rad));
  const auto irr = prefilter_pair(env, 32, 64);
  const NormalMap n = flat_normals(2, 2, {0, 0, 1});
  const double got = phong_shade(n, irr).at(0, 0, 0);
  // Same lookup by hand, then against the brute-force lobes.
  const double lookup = 0.85 * sample_bilinear(irr.diffuse, {0, 0, 1}).r + 0.15 * sample_bilinear(irr.specular, {0, 0, 1}).r;
  CHECK(got == doctest::Approx(lookup).epsilon(1e-6));
  const double oracle = 0.85 * lobe(env, {0, 0, 1}, 32, true) + 0.15 * lobe(env, {0, 0, 1}, 32, false);
  CHECK(got == doctest::Approx(oracle).epsilon(2e-2));
  // Both lobes peak here: tilting the normal lowers the response.
  const NormalMap tilted = flat_normals(2, 2, normalize({0.3, 0, 1}));
  CHECK(phong_shade(tilted, irr).at(0, 0, 0) < got);
}

TEST_CASE("left light brightens the left limb") {
  ImageF rad(128, 64, 3, ColorSpace::LinearRgb);
  const Vec3 l{-1, 0, 0};
  const PixelCoord p = direction_to_pixel(l, 64, 128);
  rad.set_rgb(static_cast<int>(std::lround(p.col)), static_cast<int>(std::lround(p.row)), {3, 3, 3});
  const auto irr = prefilter_pair(EnvMap(std::move(rad)));
  const NormalMap n = sphere(64);
  const ImageF s = phong_shade(n, irr);
  const int y = 32;
  CHECK(s.at(8, y, 0) > s.at(55, y, 0));
  for (int yy = 0; yy < 64; ++yy)
    for (int x = 0; x < 64; ++x) {
      if (n.valid.at(x, yy) <= 0) continue;
      const Vec3 nn = n.at(x, yy);
      const Vec3 r = reflect({0, 0, 1}, nn);
      if (dot(nn, l) < -0.25 && dot(r, l) < -0.25) CHECK(s.at(x, yy, 0) < 1e-6);
    }
}

TEST_CASE("shading is linear in the environment") {
  const EnvMap env(test::random_image(64, 32, 3, ColorSpace::LinearRgb, 2, 0, 2));
  ImageF scaled = env.radiance();
  for (float& v : scaled.data()) v *= 2.5f;
  const NormalMap n = sphere(32);
  const ImageF a = phong_shade(n, prefilter_pair(env));
  const ImageF b = phong_shade(n, prefilter_pair(EnvMap(scaled)));
  for (std::size_t i = 0; i < a.data().size(); ++i)
    CHECK(b.data()[i] == doctest::Approx(2.5 * a.data()[i]).epsilon(1e-5));
}

TEST_CASE("compose and delight") {
  const ImageF albedo = test::random_image(8, 8, 3, ColorSpace::LinearRgb, 1);
  CHECK(compose_relit(albedo, ImageF(8, 8, 3, ColorSpace::LinearRgb, 1.0f)) == albedo);
  const ImageF zero(8, 8, 3, ColorSpace::LinearRgb);
  const ImageF shading = test::random_image(8, 8, 3, ColorSpace::LinearRgb, 2, 0.0f, 3.0f);
  const ImageF black = compose_relit(zero, shading);
  for (float v : black.data()) CHECK(v == 0.0f);
  const ImageF grey(1, 1, 3, ColorSpace::LinearRgb, 0.5f), two(1, 1, 3, ColorSpace::LinearRgb, 2.0f);
  CHECK(compose_relit(grey, two).at(0, 0, 1) == 1.0f);
  CHECK_THROWS_AS(compose_relit(albedo, ImageF(4, 4, 3, ColorSpace::LinearRgb)), ContractError);

  const ImageF image = compose_relit(albedo, shading);
  const ImageF est = delight_baseline(image, shading);
  for (std::size_t i = 0; i < est.data().size(); ++i)
    if (shading.data()[i] > 1e-3) CHECK(est.data()[i] == doctest::Approx(albedo.data()[i]).epsilon(1e-5));

  ImageF bright(1, 1, 3, ColorSpace::LinearRgb, 0.004f);
  const ImageF floor = delight_baseline(bright, ImageF(1, 1, 3, ColorSpace::LinearRgb));
  CHECK(floor.at(0, 0, 0) == doctest::Approx(4.0f));
  ImageF brighter(1, 1, 3, ColorSpace::LinearRgb, 0.5f);
  CHECK(delight_baseline(brighter, ImageF(1, 1, 3, ColorSpace::LinearRgb)).at(0, 0, 0) == kDelightMax);
}

TEST_CASE("delighting a synthetic sphere recovers the albedo") {
  olat::SceneSpec spec;
  spec.width = spec.height = 96;
  spec.albedo = olat::AlbedoKind::Noise;
  spec.seed = 5;
  const auto scene = olat::make_scene(spec);
  Rng rng(4);
  const auto ellipses = random_ellipses({}, rng);
  const auto irr = prefilter_pair(synth_ellipse_env(32, ellipses));
  const ImageF shading = phong_shade(scene.normals, irr);
  const ImageF est = delight_baseline(compose_relit(scene.albedo, shading), shading);
  Mask lit(96, 96);
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 96; ++x) {
      const Rgb s = shading.rgb(x, y);
      if (scene.subject.at(x, y) > 0 && std::min({s.r, s.g, s.b}) > 0.1f) lit.set(x, y, 1);
    }
  REQUIRE(lit.any());
  CHECK(psnr_masked(est, scene.albedo, lit) >= 40.0);
}

TEST_CASE("normal map checks and io") {
  NormalMap n = sphere(24);
  CHECK(check_normals(n).non_unit == 0);
  CHECK(check_normals(n).back_facing == 0);
  validate_normals(n);

  NormalMap bad = n;
  bad.normals.at(12, 12, 0) += 0.1f;
  CHECK(check_normals(bad).non_unit == 1);
  CHECK_THROWS_AS(validate_normals(bad), ContractError);
  NormalMap back = n;
  back.normals.set_rgb(12, 12, {0, 0, -1});
  CHECK(check_normals(back).back_facing == 1);
  validate_normals(back);  // back-facing is a warning, not an error

  test::TempDir dir;
  write_normals(dir / "n.pfm", n);
  const NormalMap pfm = read_normals(dir / "n.pfm");
  CHECK(pfm.valid == n.valid);
  CHECK(test::max_abs_diff(pfm.normals, n.normals) < 1e-6);
  write_normals(dir / "n.png", n);
  const NormalMap png = read_normals(dir / "n.png");
  CHECK(png.valid == n.valid);
  CHECK(test::max_abs_diff(png.normals, n.normals) < 1e-4);

  // 16-bit PNG decode is n = 2v - 1.
  ImageF enc(1, 1, 3, ColorSpace::Scalar);
  enc.set_rgb(0, 0, {0.5f, 0.5f, 1.0f});
  const NormalMap up = normals_from_image(enc, true);
  CHECK(up.at(0, 0).z == doctest::Approx(1.0));
  CHECK(up.valid.at(0, 0) == 1.0f);
}

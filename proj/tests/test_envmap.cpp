#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "doctest.h"
#include "relight/envmap.hpp"
#include "relight/error.hpp"
#include "support.hpp"

using namespace relight;
using namespace relight::env;

namespace {

Vec3 dir_of(double theta, double phi) {
  return {std::cos(theta) * std::sin(phi), std::sin(theta), std::cos(theta) * std::cos(phi)};
}

// Direct quadrature over env pixels; `sub` > 1 splits each pixel into
// sub x sub cells that inherit the pixel's radiance.
Rgb lobe_oracle(const EnvMap& env, Lobe lobe, double exponent, const Vec3& d, int sub = 1) {
  const int h = env.height(), w = env.width();
  double acc[3] = {0, 0, 0}, norm = 0;
  for (int i = 0; i < h * sub; ++i) {
    const double theta = kPi * (0.5 - (i + 0.5) / (h * sub));
    const double dw = (2 * kPi / (w * sub)) * (kPi / (h * sub)) * std::cos(theta);
    for (int j = 0; j < w * sub; ++j) {
      const double phi = 2 * kPi * ((j + 0.5) / (w * sub) - 0.5);
      const double c = std::max(0.0, dot(d, dir_of(theta, phi)));
      const double k = (lobe == Lobe::Diffuse ? c : std::pow(c, exponent)) * dw;
      const Rgb L = env.at(i / sub, j / sub);
      acc[0] += k * L.r;
      acc[1] += k * L.g;
      acc[2] += k * L.b;
      norm += k;
    }
  }
  return {static_cast<float>(acc[0] / norm), static_cast<float>(acc[1] / norm), static_cast<float>(acc[2] / norm)};
}

EnvMap random_env(int h, std::uint64_t seed) {
  return EnvMap(test::random_image(2 * h, h, 3, ColorSpace::LinearRgb, seed, 0.0f, 3.0f));
}

Vec3 random_dir(Rng& rng) {
  const double z = 2 * rng.uniform() - 1, a = 2 * kPi * rng.uniform();
  const double r = std::sqrt(1 - z * z);
  return {r * std::cos(a), r * std::sin(a), z};
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-30); }

Bytes hdr_bytes(const std::string& header, std::initializer_list<std::uint8_t> pixels) {
  Bytes b(header.begin(), header.end());
  b.insert(b.end(), pixels);
  return b;
}

}  // namespace

TEST_CASE("rgbe decode pins") {
  const auto env = decode_radiance_hdr(
      hdr_bytes("#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 1 +X 2\n", {128, 128, 128, 129, 200, 10, 3, 0}));
  REQUIRE(env.width() == 2);
  CHECK(env.at(0, 0) == Rgb{1.0f, 1.0f, 1.0f});
  CHECK(env.at(0, 1) == Rgb{0, 0, 0});
}

TEST_CASE("hdr encode and decode round trip within rgbe precision") {
  const EnvMap env = random_env(32, 4);
  const EnvMap back = decode_radiance_hdr(encode_radiance_hdr(env));
  REQUIRE(back.width() == env.width());
  for (int i = 0; i < env.height(); ++i)
    for (int j = 0; j < env.width(); ++j) {
      const Rgb a = env.at(i, j), b = back.at(i, j);
      const double m = std::max({a.r, a.g, a.b});
      for (int c = 0; c < 3; ++c) CHECK(std::abs(a[c] - b[c]) <= 0.01 * m);
    }
}

TEST_CASE("hdr decode errors") {
  CHECK_THROWS_AS(decode_radiance_hdr(hdr_bytes("P6\n2 1\n255\n", {0, 0, 0})), DecodeError);
  CHECK_THROWS_AS(decode_radiance_hdr(hdr_bytes("#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n+Y 1 +X 2\n",
                                                {128, 128, 128, 129, 128, 128, 128, 129})),
                  DecodeError);
  const Bytes good = encode_radiance_hdr(random_env(16, 2));
  Bytes cut(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(good.size() * 2 / 3));
  CHECK_THROWS_AS(decode_radiance_hdr(cut), DecodeError);

  // Corrupt the width stored in the first scanline header.
  Bytes bad = good;
  const std::string s(bad.begin(), bad.end());
  const auto pos = s.find("+X 32\n");
  REQUIRE(pos != std::string::npos);
  const std::size_t line = pos + 6;
  REQUIRE(bad[line] == 2);
  bad[line + 3] ^= 0x11;
  CHECK_THROWS_AS(decode_radiance_hdr(bad), DecodeError);
}

TEST_CASE("pixel and direction mapping") {
  const int h = 8, w = 16;
  const Vec3 c = pixel_to_direction(h / 2, w / 2, h, w);
  const double half_px = 0.5 * std::hypot(kPi / h, 2 * kPi / w);
  CHECK(std::acos(std::min(1.0, c.z)) <= half_px);
  for (int j = 0; j < w; ++j) CHECK(pixel_to_direction(0, j, h, w).y > std::cos(kPi / h));

  Rng rng(2);
  for (int k = 0; k < 200; ++k) {
    const int i = static_cast<int>(rng.uniform_index(h)), j = static_cast<int>(rng.uniform_index(w));
    const Vec3 d = pixel_to_direction(i, j, h, w);
    CHECK(length(d) == doctest::Approx(1.0).epsilon(1e-12));
    const PixelCoord p = direction_to_pixel(d, h, w);
    CHECK(p.row == doctest::Approx(i).epsilon(1e-9));
    CHECK(p.col == doctest::Approx(j).epsilon(1e-9));
    const Vec3 back = pixel_to_direction(static_cast<int>(std::lround(p.row)), static_cast<int>(std::lround(p.col)), h, w);
    CHECK(length(d - back) <= 1e-12);
  }
}

TEST_CASE("solid angles") {
  double sum = 0;
  for (int i = 0; i < 64; ++i) sum += 128 * solid_angle(i, 64, 128);
  CHECK(std::abs(sum - 4 * kPi) <= 1e-3 * 4 * kPi);
  CHECK(solid_angle(32, 64, 128) > solid_angle(0, 64, 128));
  // 2x4 map: (2 pi / 4)(pi / 2) cos(pi / 4) for both rows.
  const double hand = kPi * kPi * std::sqrt(2.0) / 8;
  CHECK(solid_angle(0, 2, 4) == doctest::Approx(hand).epsilon(1e-12));
  CHECK(solid_angle(1, 2, 4) == doctest::Approx(hand).epsilon(1e-12));
}

TEST_CASE("bilinear lookup") {
  const EnvMap c = EnvMap::constant(8, {0.3f, 0.6f, 0.9f});
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    const Rgb v = sample_bilinear(c, random_dir(rng));
    CHECK(v.r == doctest::Approx(0.3f));
    CHECK(v.b == doctest::Approx(0.9f));
  }
  const EnvMap env = random_env(8, 9);
  const Rgb at = sample_bilinear(env, pixel_to_direction(3, 5, 8, 16));
  CHECK(at.g == doctest::Approx(env.at(3, 5).g).epsilon(1e-5));

  // phi = pi lies halfway between the last and the first column.
  const double theta = kPi * (0.5 - 3.5 / 8);
  const Rgb seam = sample_bilinear(env, dir_of(theta, kPi));
  CHECK(seam.r == doctest::Approx(0.5 * (env.at(3, 0).r + env.at(3, 15).r)).epsilon(1e-5));
  const Rgb left = sample_bilinear(env, dir_of(theta, kPi - 1e-9));
  const Rgb right = sample_bilinear(env, dir_of(theta, -kPi + 1e-9));
  CHECK(left.r == doctest::Approx(right.r).epsilon(1e-5));
  CHECK_THROWS_AS(sample_bilinear(env, Vec3{}), ContractError);
}

TEST_CASE("white furnace in both lobes") {
  const EnvMap white = EnvMap::constant(32, {1, 1, 1});
  for (double e : {1.0, 8.0, 32.0, 128.0}) {
    const EnvMap spec = prefilter(white, Lobe::Specular, e, 16);
    for (float v : spec.radiance().data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-3));
  }
  const EnvMap diff = prefilter(white, Lobe::Diffuse, 1, 16);
  for (float v : diff.radiance().data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-3));
  const EnvMap grey = EnvMap::constant(32, {0.25f, 0.25f, 0.25f});
  const EnvMap grey_spec = prefilter(grey, Lobe::Specular, 32, 16);
  for (float v : grey_spec.radiance().data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-3));
}

TEST_CASE("prefiltered values match direct quadrature") {
  const EnvMap env = random_env(16, 21);
  Rng rng(8);
  for (int k = 0; k < 16; ++k) {
    const Vec3 d = random_dir(rng);
    for (Lobe lobe : {Lobe::Diffuse, Lobe::Specular}) {
      const Rgb got = prefilter_at(env, lobe, 32, d);
      const Rgb want = lobe_oracle(env, lobe, 32, d, prefilter_subdivision(env.height()));
      for (int c = 0; c < 3; ++c) CHECK(rel(got[c], want[c]) <= 1e-6);
    }
  }
}

TEST_CASE("diffuse response to a single lit pixel follows the cosine") {
  ImageF rad(64, 32, 3, ColorSpace::LinearRgb);
  rad.set_rgb(20, 10, {5, 5, 5});
  const EnvMap env(std::move(rad));
  const Vec3 l = pixel_to_direction(10, 20, 32, 64);
  const EnvMap out = prefilter(env, Lobe::Diffuse, 1, 16);
  double ratio_min = 1e30, ratio_max = 0, best = -1;
  int best_i = -1, best_j = -1;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 32; ++j) {
      const Vec3 d = pixel_to_direction(i, j, 16, 32);
      const double v = out.at(i, j).r, c = dot(d, l);
      // The lit pixel's footprint reaches about 0.1 past its center.
      if (c <= -0.1) CHECK(v == 0.0);
      if (c <= 0) continue;
      if (v > best) best = v, best_i = i, best_j = j;
      if (c > 0.1) {
        ratio_min = std::min(ratio_min, v / c);
        ratio_max = std::max(ratio_max, v / c);
      }
    }
  CHECK(ratio_max / ratio_min < 1.01);
  const Vec3 peak = pixel_to_direction(best_i, best_j, 16, 32);
  CHECK(std::acos(std::min(1.0, dot(peak, l))) <= 0.5 * std::hypot(kPi / 16, 2 * kPi / 32) + 1e-9);
}

TEST_CASE("specular lobe narrows with the exponent") {
  ImageF rad(128, 64, 3, ColorSpace::LinearRgb);
  rad.set_rgb(64, 32, {1, 1, 1});
  const EnvMap env(std::move(rad));
  const Vec3 l = pixel_to_direction(32, 64, 64, 128);
  auto half_width = [&](double e) {
    const double peak = prefilter_at(env, Lobe::Specular, e, l).r;
    // March away from l along longitude until the response halves.
    for (double a = 0; a < kPi / 2; a += 1e-3) {
      const Vec3 d = normalize(rotate_y(l, a));
      if (prefilter_at(env, Lobe::Specular, e, d).r < 0.5 * peak) return a;
    }
    return kPi / 2;
  };
  const double w1 = half_width(1), w32 = half_width(32), w256 = half_width(256);
  CHECK(w1 > w32);
  CHECK(w32 > w256);
}

TEST_CASE("prefilter is linear and commutes with whole-column rotations") {
  const EnvMap a = random_env(32, 1), b = random_env(32, 2);
  ImageF sum(64, 32, 3, ColorSpace::LinearRgb);
  for (std::size_t i = 0; i < sum.data().size(); ++i)
    sum.data()[i] = 2.0f * a.radiance().data()[i] + 0.5f * b.radiance().data()[i];
  const EnvMap pa = prefilter(a, Lobe::Specular, 32, 8), pb = prefilter(b, Lobe::Specular, 32, 8);
  const EnvMap ps = prefilter(EnvMap(sum), Lobe::Specular, 32, 8);
  for (std::size_t i = 0; i < ps.radiance().data().size(); ++i) {
    const double want = 2.0 * pa.radiance().data()[i] + 0.5 * pb.radiance().data()[i];
    CHECK(rel(ps.radiance().data()[i], want) <= 1e-5);
  }

  const double angle = 2 * kPi * 2 / 16;  // 4 env columns, 2 output columns
  for (Lobe lobe : {Lobe::Diffuse, Lobe::Specular}) {
    const EnvMap x = prefilter(rotate_yaw(a, angle), lobe, 32, 8);
    const EnvMap y = rotate_yaw(prefilter(a, lobe, 32, 8), angle);
    for (std::size_t i = 0; i < x.radiance().data().size(); ++i)
      CHECK(rel(x.radiance().data()[i], y.radiance().data()[i]) <= 1e-3);
  }
}

TEST_CASE("rotation examples") {
  const EnvMap env = random_env(8, 3);
  const EnvMap r = rotate_yaw(env, 2 * kPi * 3 / 16);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 16; ++j) CHECK(r.at(i, (j + 3) % 16) == env.at(i, j));
  CHECK(rotate_yaw(env, 2 * kPi).radiance() == env.radiance());
  const EnvMap half = rotate_yaw(env, 2 * kPi * 0.5 / 16);
  CHECK(half.at(2, 4).g == doctest::Approx(0.5 * (env.at(2, 4).g + env.at(2, 3).g)).epsilon(1e-5));
  // A rotated direction samples the same radiance.
  const EnvMap smooth = prefilter(random_env(32, 7), Lobe::Diffuse, 1, 32);
  const EnvMap turned = rotate_yaw(smooth, 0.37);
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const Vec3 d = random_dir(rng);
    CHECK(sample_bilinear(turned, rotate_y(d, 0.37)).r == doctest::Approx(sample_bilinear(smooth, d).r).epsilon(2e-2));
  }
}

TEST_CASE("ellipse environments") {
  const EnvMap black = synth_ellipse_env(16, {});
  for (float v : black.radiance().data()) CHECK(v == 0.0f);

  const Ellipse all{0, 0, 20, 20, {1, 1, 1}, 0};
  const EnvMap white = synth_ellipse_env(16, std::span(&all, 1));
  for (float v : white.radiance().data()) CHECK(v == 1.0f);

  const Ellipse small{0.4, 0.2, 0.3, 0.2, {2, 1, 0.5f}, 0};
  const int h = 256, w = 512;
  const EnvMap env = synth_ellipse_env(h, std::span(&small, 1));
  int lit = 0;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) lit += env.at(i, j).r > 0;
  const double expected = kPi * 0.3 * 0.2 / ((2 * kPi / w) * (kPi / h));
  CHECK(std::abs(lit - expected) <= 0.1 * expected);

  const Ellipse bad{0, 0, 0, 0.2, {1, 1, 1}, 0};
  CHECK_THROWS_AS(synth_ellipse_env(16, std::span(&bad, 1)), ContractError);

  Rng r1(9), r2(9);
  const auto e1 = random_ellipses({}, r1), e2 = random_ellipses({}, r2);
  REQUIRE(e1.size() == e2.size());
  CHECK(synth_ellipse_env(16, e1).radiance() == synth_ellipse_env(16, e2).radiance());
}

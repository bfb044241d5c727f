#include "relight/olat.hpp"

#include <algorithm>
#include <cmath>

#include "relight/error.hpp"
#include "relight/parallel.hpp"
#include "relight/rng.hpp"

namespace relight::olat {
namespace {

double band_solid_angle(int row, int height, int width) {
  const double top = kPi * (0.5 - static_cast<double>(row) / height);
  const double bottom = kPi * (0.5 - static_cast<double>(row + 1) / height);
  return (2.0 * kPi / width) * (std::sin(top) - std::sin(bottom));
}

double lobe_power(double c, double exponent) {
  if (c <= 0) return 0.0;
  return std::pow(c, exponent);
}

}  // namespace

std::size_t nearest_light(const LightRig& rig, const Vec3& dir) {
  std::size_t best = 0;
  double best_dot = -INFINITY;
  for (std::size_t k = 0; k < rig.directions.size(); ++k) {
    const double d = dot(rig.directions[k], dir);
    if (d > best_dot) {
      best_dot = d;
      best = k;
    }
  }
  return best;
}

LightRig make_light_rig(int count, std::uint64_t seed) {
  require(count >= 1, "make_light_rig: count must be >= 1");
  LightRig rig;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  double offset = 0;
  if (seed != 0) {
    Rng rng(seed);
    offset = 2.0 * kPi * rng.uniform();
  }
  for (int i = 0; i < count; ++i) {
    const double y = 1.0 - 2.0 * (i + 0.5) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
    const double phi = i * golden + offset;
    rig.directions.push_back({r * std::sin(phi), y, r * std::cos(phi)});
  }
  rig.weights.assign(count, 0.0);
  const int h = kRigGridHeight, w = 2 * kRigGridHeight;
  for (int i = 0; i < h; ++i) {
    const double omega = band_solid_angle(i, h, w);
    for (int j = 0; j < w; ++j) rig.weights[nearest_light(rig, env::pixel_to_direction(i, j, h, w))] += omega;
  }
  return rig;
}

void validate(const LightRig& rig) {
  require(!rig.directions.empty(), "LightRig: no lights");
  require(rig.directions.size() == rig.weights.size(), "LightRig: direction/weight count mismatch");
  double total = 0;
  for (std::size_t k = 0; k < rig.size(); ++k) {
    require(std::abs(length(rig.directions[k]) - 1.0) < 1e-9, "LightRig: directions must be unit vectors");
    require(rig.weights[k] > 0, "LightRig: weights must be positive");
    total += rig.weights[k];
  }
  require(std::abs(total - 4.0 * kPi) <= 1e-6, "LightRig: weights must sum to 4 pi");
}

LightRig rotate_rig(const LightRig& rig, double angle) {
  LightRig out = rig;
  for (Vec3& d : out.directions) d = rotate_y(d, angle);
  return out;
}

Geometry parse_geometry(const std::string& name) {
  if (name == "sphere") return Geometry::Sphere;
  if (name == "heightfield") return Geometry::Heightfield;
  throw ContractError("unknown geometry '" + name + "' (expected sphere or heightfield)");
}

AlbedoKind parse_albedo(const std::string& name) {
  if (name == "white") return AlbedoKind::White;
  if (name == "constant") return AlbedoKind::Constant;
  if (name == "checker") return AlbedoKind::Checker;
  if (name == "noise") return AlbedoKind::Noise;
  throw ContractError("unknown albedo '" + name + "' (expected white, constant, checker or noise)");
}

std::string to_string(Geometry g) { return g == Geometry::Sphere ? "sphere" : "heightfield"; }

std::string to_string(AlbedoKind a) {
  switch (a) {
    case AlbedoKind::White: return "white";
    case AlbedoKind::Constant: return "constant";
    case AlbedoKind::Checker: return "checker";
    case AlbedoKind::Noise: return "noise";
  }
  return "white";
}

SceneAssets make_scene(const SceneSpec& spec) {
  require(spec.width >= 4 && spec.height >= 4, "make_scene: image must be at least 4x4");
  require(spec.exponent >= 1, "make_scene: exponent must be >= 1");
  require(spec.checker_px >= 1, "make_scene: checker_px must be >= 1");
  const int w = spec.width, h = spec.height;
  SceneAssets out{{ImageF(w, h, 3, ColorSpace::Scalar), Mask(w, h)}, Mask(w, h), ImageF(w, h, 3, ColorSpace::LinearRgb)};
  const double cx = 0.5 * w, cy = 0.5 * h;

  struct Bump {
    double x, y, sigma, amp;
  };
  std::vector<Bump> bumps;
  const double a = 0.35 * w, b = 0.45 * h, c = std::min(a, b);
  if (spec.geometry == Geometry::Heightfield) {
    Rng rng = Rng(spec.seed).split(11);
    for (int k = 0; k < 6; ++k) {
      const double t = 2.0 * kPi * rng.uniform();
      const double rad = 0.6 * std::sqrt(rng.uniform());
      const double sigma = (0.05 + 0.07 * rng.uniform()) * std::min(w, h);
      const double amp = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.15 + 0.2 * rng.uniform()) * sigma;
      bumps.push_back({rad * a * std::cos(t), rad * b * std::sin(t), sigma, amp});
    }
  }

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double X = x + 0.5 - cx, Y = cy - (y + 0.5);
      Vec3 n;
      if (spec.geometry == Geometry::Sphere) {
        const double r = 0.45 * std::min(w, h);
        const double u = X / r, v = Y / r;
        const double q = u * u + v * v;
        if (q >= 1.0) continue;
        n = {u, v, std::sqrt(1.0 - q)};
      } else {
        const double u = X / a, v = Y / b;
        const double q = u * u + v * v;
        if (q >= 0.95) continue;
        const double s = std::sqrt(1.0 - q);
        double zx = -c * X / (a * a * s), zy = -c * Y / (b * b * s);
        for (const Bump& bp : bumps) {
          const double dx = X - bp.x, dy = Y - bp.y;
          const double g = bp.amp * std::exp(-(dx * dx + dy * dy) / (2 * bp.sigma * bp.sigma));
          zx -= g * dx / (bp.sigma * bp.sigma);
          zy -= g * dy / (bp.sigma * bp.sigma);
        }
        n = normalize(Vec3{-zx, -zy, 1.0});
      }
      out.subject.set(x, y, 1.0f);
      out.normals.valid.set(x, y, 1.0f);
      out.normals.normals.at(x, y, 0) = static_cast<float>(n.x);
      out.normals.normals.at(x, y, 1) = static_cast<float>(n.y);
      out.normals.normals.at(x, y, 2) = static_cast<float>(n.z);
    }
  }

  // Smooth value noise: bilinear interpolation of an 8x8 grid of colors.
  constexpr int kNoiseGrid = 8;
  std::vector<Rgb> lattice;
  if (spec.albedo == AlbedoKind::Noise) {
    Rng rng = Rng(spec.seed).split(12);
    for (int i = 0; i < (kNoiseGrid + 1) * (kNoiseGrid + 1); ++i) {
      lattice.push_back({static_cast<float>(0.2 + 0.7 * rng.uniform()), static_cast<float>(0.2 + 0.7 * rng.uniform()),
                         static_cast<float>(0.2 + 0.7 * rng.uniform())});
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (out.subject.at(x, y) <= 0) continue;
      Rgb col{1, 1, 1};
      switch (spec.albedo) {
        case AlbedoKind::White: break;
        case AlbedoKind::Constant: col = spec.color; break;
        case AlbedoKind::Checker:
          col = ((x / spec.checker_px + y / spec.checker_px) % 2 == 0) ? spec.color : spec.color2;
          break;
        case AlbedoKind::Noise: {
          const double gx = (x + 0.5) / w * kNoiseGrid, gy = (y + 0.5) / h * kNoiseGrid;
          const int ix = std::min(static_cast<int>(gx), kNoiseGrid - 1), iy = std::min(static_cast<int>(gy), kNoiseGrid - 1);
          const double fx = gx - ix, fy = gy - iy;
          auto L = [&](int i, int j) { return lattice[static_cast<std::size_t>(j) * (kNoiseGrid + 1) + i]; };
          for (int ch = 0; ch < 3; ++ch) {
            const double top = (1 - fx) * L(ix, iy)[ch] + fx * L(ix + 1, iy)[ch];
            const double bot = (1 - fx) * L(ix, iy + 1)[ch] + fx * L(ix + 1, iy + 1)[ch];
            const float v = static_cast<float>((1 - fy) * top + fy * bot);
            if (ch == 0) col.r = v;
            else if (ch == 1) col.g = v;
            else col.b = v;
          }
          break;
        }
      }
      out.albedo.set_rgb(x, y, col);
    }
  }
  return out;
}

double reflectance(const Vec3& n, const Vec3& light, double exponent, const Vec3& view) {
  const Vec3 r = reflect(view, n);
  return kDiffuseWeight * std::max(0.0, dot(n, light)) / kPi +
         kSpecularWeight * (exponent + 1.0) / (2.0 * kPi) * lobe_power(dot(r, light), exponent);
}

double white_furnace_normalizer(const LightRig& rig, double exponent) {
  double z = 0;
  for (std::size_t k = 0; k < rig.size(); ++k) z += rig.weights[k] * reflectance({0, 0, 1}, rig.directions[k], exponent);
  return z;
}

OlatStack synth_olat(const SceneAssets& assets, const SceneSpec& scene, const LightRig& rig) {
  validate(rig);
  require(assets.subject.matches(assets.albedo) && assets.normals.valid.matches(assets.albedo),
          "synth_olat: scene assets have inconsistent sizes");
  OlatStack st;
  st.rig = rig;
  st.subject = assets.subject;
  st.albedo_gt = assets.albedo;
  st.normals_gt = assets.normals;
  st.scene = scene;
  st.z = white_furnace_normalizer(rig, scene.exponent);
  const int w = assets.albedo.width(), h = assets.albedo.height();
  st.images.assign(rig.size(), ImageF(w, h, 3, ColorSpace::LinearRgb));
  parallel_for(rig.size(), [&](std::size_t k) {
    ImageF& img = st.images[k];
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (st.subject.at(x, y) <= 0 || st.normals_gt.valid.at(x, y) <= 0) continue;
        const double f = reflectance(st.normals_gt.at(x, y), rig.directions[k], scene.exponent);
        if (f == 0.0) continue;
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<float>(f * st.albedo_gt.at(x, y, c));
      }
  });
  return st;
}

OlatStack synth_olat(const SceneSpec& scene, const LightRig& rig) { return synth_olat(make_scene(scene), scene, rig); }

std::vector<std::array<double, 3>> env_to_light_weights(const env::EnvMap& env, const LightRig& rig) {
  require(!env.empty(), "env_to_light_weights: empty environment");
  require(!rig.directions.empty(), "env_to_light_weights: empty rig");
  std::vector<std::array<double, 3>> out(rig.size(), {0.0, 0.0, 0.0});
  const int h = env.height(), w = env.width();
  for (int i = 0; i < h; ++i) {
    const double omega = env::solid_angle(i, h, w);
    for (int j = 0; j < w; ++j) {
      const Rgb L = env.at(i, j);
      auto& acc = out[nearest_light(rig, env::pixel_to_direction(i, j, h, w))];
      acc[0] += L.r * omega;
      acc[1] += L.g * omega;
      acc[2] += L.b * omega;
    }
  }
  return out;
}

ImageF ibr_render(const OlatStack& stack, const std::vector<std::array<double, 3>>& weights) {
  require(weights.size() == stack.images.size(), "ibr_render: weight count differs from light count");
  require(stack.z > 0, "ibr_render: white-furnace normalizer must be positive");
  const int w = stack.width(), h = stack.height();
  for (const ImageF& img : stack.images)
    require(img.width() == w && img.height() == h && img.channels() == 3, "ibr_render: OLAT image size mismatch");
  ImageF out(w, h, 3, ColorSpace::LinearRgb);
  const double inv_z = 1.0 / stack.z;
  parallel_for(static_cast<std::size_t>(h), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    std::vector<double> acc(static_cast<std::size_t>(w) * 3, 0.0);
    for (std::size_t k = 0; k < stack.images.size(); ++k) {
      const auto src = stack.images[k].data().subspan(static_cast<std::size_t>(y) * w * 3, static_cast<std::size_t>(w) * 3);
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) acc[3 * x + c] += weights[k][c] * src[3 * x + c];
    }
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<float>(acc[3 * x + c] * inv_z);
  });
  return out;
}

ImageF ibr_render(const OlatStack& stack, const env::EnvMap& env) {
  return ibr_render(stack, env_to_light_weights(env, stack.rig));
}

}  // namespace relight::olat

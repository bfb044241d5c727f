#include <algorithm>
#include <cmath>

#include "relight/envmap.hpp"
#include "relight/error.hpp"

namespace relight::env {

EnvMap synth_ellipse_env(int height, std::span<const Ellipse> ellipses) {
  require(height >= 1, "synth_ellipse_env: height must be >= 1");
  for (const Ellipse& e : ellipses) {
    require(e.radius_phi > 0 && e.radius_theta > 0, "synth_ellipse_env: ellipse radii must be positive");
    require(e.feather >= 0, "synth_ellipse_env: feather must be non-negative");
    require(e.color.r >= 0 && e.color.g >= 0 && e.color.b >= 0, "synth_ellipse_env: color must be non-negative");
  }
  const int width = 2 * height;
  ImageF img(width, height, 3, ColorSpace::LinearRgb);
  for (int i = 0; i < height; ++i) {
    const double theta = kPi * (0.5 - (i + 0.5) / height);
    for (int j = 0; j < width; ++j) {
      const double phi = 2.0 * kPi * ((j + 0.5) / width - 0.5);
      double r = 0, g = 0, b = 0;
      for (const Ellipse& e : ellipses) {
        const double dphi = std::remainder(phi - e.phi, 2.0 * kPi);
        const double dtheta = theta - e.theta;
        const double radius = std::hypot(dphi / e.radius_phi, dtheta / e.radius_theta);
        double alpha;
        if (e.feather > 0) {
          alpha = std::clamp((1.0 + 0.5 * e.feather - radius) / e.feather, 0.0, 1.0);
        } else {
          alpha = radius <= 1.0 ? 1.0 : 0.0;
        }
        if (alpha <= 0) continue;
        r = r * (1 - alpha) + e.color.r * alpha;
        g = g * (1 - alpha) + e.color.g * alpha;
        b = b * (1 - alpha) + e.color.b * alpha;
      }
      img.set_rgb(j, i, {static_cast<float>(r), static_cast<float>(g), static_cast<float>(b)});
    }
  }
  return EnvMap(std::move(img));
}

std::vector<Ellipse> random_ellipses(const EllipseRanges& ranges, Rng& rng) {
  require(ranges.count_min >= 0 && ranges.count_max >= ranges.count_min, "random_ellipses: bad count range");
  require(ranges.radius_min > 0 && ranges.radius_max >= ranges.radius_min, "random_ellipses: bad radius range");
  require(ranges.intensity_min >= 0 && ranges.intensity_max >= ranges.intensity_min,
          "random_ellipses: bad intensity range");
  require(ranges.feather_min >= 0 && ranges.feather_max >= ranges.feather_min, "random_ellipses: bad feather range");

  auto between = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  const int count = ranges.count_min +
                    static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(ranges.count_max - ranges.count_min) + 1));
  std::vector<Ellipse> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    Ellipse e;
    e.phi = between(-kPi, kPi);
    e.theta = std::asin(between(-1.0, 1.0));
    e.radius_phi = between(ranges.radius_min, ranges.radius_max);
    e.radius_theta = between(ranges.radius_min, ranges.radius_max);
    e.feather = between(ranges.feather_min, ranges.feather_max);
    const double intensity = between(ranges.intensity_min, ranges.intensity_max);
    double c[3] = {between(0.1, 1.0), between(0.1, 1.0), between(0.1, 1.0)};
    const double peak = std::max({c[0], c[1], c[2]});
    e.color = {static_cast<float>(intensity * c[0] / peak), static_cast<float>(intensity * c[1] / peak),
               static_cast<float>(intensity * c[2] / peak)};
    out.push_back(e);
  }
  return out;
}

}  // namespace relight::env

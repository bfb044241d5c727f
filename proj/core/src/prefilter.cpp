#include <algorithm>
#include <cmath>
#include <vector>

#include "relight/envmap.hpp"
#include "relight/error.hpp"
#include "relight/parallel.hpp"

namespace relight::env {
namespace {

// Environment flattened into structure-of-arrays form: sub-cell directions,
// solid angles and radiance pre-multiplied by solid angle. Each pixel is
// split into s x s sub-cells that carry its radiance.
struct Quadrature {
  std::vector<double> x, y, z, dw, lr, lg, lb;

  explicit Quadrature(const EnvMap& env) {
    const int h = env.height(), w = env.width();
    const int s = prefilter_subdivision(h);
    const int sh = h * s, sw = w * s;
    const std::size_t n = static_cast<std::size_t>(sh) * sw;
    for (auto* v : {&x, &y, &z, &dw, &lr, &lg, &lb}) v->resize(n);
    for (int i = 0; i < sh; ++i) {
      const double omega = solid_angle(i, sh, sw);
      for (int j = 0; j < sw; ++j) {
        const std::size_t k = static_cast<std::size_t>(i) * sw + j;
        const Vec3 d = pixel_to_direction(i, j, sh, sw);
        const Rgb L = env.at(i / s, j / s);
        x[k] = d.x;
        y[k] = d.y;
        z[k] = d.z;
        dw[k] = omega;
        lr[k] = L.r * omega;
        lg[k] = L.g * omega;
        lb[k] = L.b * omega;
      }
    }
  }
};

// c^e for c >= 0; exact repeated squaring for small integer exponents.
struct LobePower {
  double exponent;
  int integer;

  explicit LobePower(double e) : exponent(e), integer(-1) {
    if (e == std::floor(e) && e >= 1 && e <= 1024) integer = static_cast<int>(e);
  }

  double operator()(double c) const {
    if (integer < 0) return std::pow(c, exponent);
    double result = 1.0, base = c;
    for (int n = integer; n > 0; n >>= 1) {
      if (n & 1) result *= base;
      base *= base;
    }
    return result;
  }
};

Rgb evaluate(const Quadrature& q, Lobe lobe, const LobePower& power, const Vec3& d) {
  double nr = 0, ng = 0, nb = 0, den = 0;
  const std::size_t n = q.x.size();
  if (lobe == Lobe::Diffuse) {
    for (std::size_t k = 0; k < n; ++k) {
      const double c = d.x * q.x[k] + d.y * q.y[k] + d.z * q.z[k];
      const double kern = c > 0 ? c : 0.0;
      den += kern * q.dw[k];
      nr += kern * q.lr[k];
      ng += kern * q.lg[k];
      nb += kern * q.lb[k];
    }
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      const double c = d.x * q.x[k] + d.y * q.y[k] + d.z * q.z[k];
      if (c <= 0) continue;
      const double kern = power(c);
      den += kern * q.dw[k];
      nr += kern * q.lr[k];
      ng += kern * q.lg[k];
      nb += kern * q.lb[k];
    }
  }
  if (den <= 0) return {};
  return {static_cast<float>(nr / den), static_cast<float>(ng / den), static_cast<float>(nb / den)};
}

void check(const EnvMap& env, Lobe lobe, double exponent) {
  require(!env.empty(), "prefilter: empty environment");
  if (lobe == Lobe::Specular) require(exponent >= 1.0, "prefilter: specular exponent must be >= 1");
}

}  // namespace

int prefilter_subdivision(int env_height) { return std::max(1, (48 + env_height - 1) / env_height); }

Rgb prefilter_at(const EnvMap& env, Lobe lobe, double exponent, const Vec3& dir) {
  check(env, lobe, exponent);
  if (dot(dir, dir) == 0.0) throw ContractError("prefilter_at: zero direction");
  const Quadrature q(env);
  return evaluate(q, lobe, LobePower(exponent), normalize(dir));
}

EnvMap prefilter(const EnvMap& env, Lobe lobe, double exponent, int out_h) {
  check(env, lobe, exponent);
  require(out_h >= 1 && out_h <= env.height(), "prefilter: out_h must be in [1, env height]");
  const Quadrature q(env);
  const LobePower power(exponent);
  const int out_w = 2 * out_h;
  ImageF out(out_w, out_h, 3, ColorSpace::LinearRgb);
  parallel_for(static_cast<std::size_t>(out_h) * out_w, [&](std::size_t idx) {
    const int i = static_cast<int>(idx / out_w), j = static_cast<int>(idx % out_w);
    out.set_rgb(j, i, evaluate(q, lobe, power, pixel_to_direction(i, j, out_h, out_w)));
  });
  return EnvMap(std::move(out));
}

IrradiancePair prefilter_pair(const EnvMap& env, double exponent, int out_h) {
  return {prefilter(env, Lobe::Diffuse, 1.0, out_h), prefilter(env, Lobe::Specular, exponent, out_h), exponent};
}

}  // namespace relight::env

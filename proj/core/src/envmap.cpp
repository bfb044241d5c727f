#include "relight/envmap.hpp"

#include <algorithm>
#include <cmath>

#include "relight/error.hpp"

namespace relight::env {

EnvMap::EnvMap(ImageF radiance) : radiance_(std::move(radiance)) {
  require(radiance_.channels() == 3, "EnvMap: radiance must have 3 channels");
  require(radiance_.width() == 2 * radiance_.height(), "EnvMap: width must equal 2 * height");
  for (float v : radiance_.data()) {
    if (!std::isfinite(v) || v < 0) throw ContractError("EnvMap: radiance must be finite and non-negative");
  }
  radiance_.set_space(ColorSpace::LinearRgb);
}

EnvMap EnvMap::from_radiance(ImageF radiance) {
  for (float& v : radiance.data()) v = std::isfinite(v) ? std::max(v, 0.0f) : 0.0f;
  return EnvMap(std::move(radiance));
}

EnvMap EnvMap::constant(int height, const Rgb& value) {
  ImageF img(2 * height, height, 3, ColorSpace::LinearRgb);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < 2 * height; ++x) img.set_rgb(x, y, value);
  return EnvMap(std::move(img));
}

Vec3 pixel_to_direction(int row, int col, int height, int width) {
  const double theta = kPi * (0.5 - (row + 0.5) / height);
  const double phi = 2.0 * kPi * ((col + 0.5) / width - 0.5);
  const double ct = std::cos(theta);
  return {ct * std::sin(phi), std::sin(theta), ct * std::cos(phi)};
}

PixelCoord direction_to_pixel(const Vec3& dir, int height, int width) {
  const Vec3 d = normalize(dir);
  const double theta = std::asin(std::clamp(d.y, -1.0, 1.0));
  const double phi = std::atan2(d.x, d.z);
  return {(0.5 - theta / kPi) * height - 0.5, (phi / (2.0 * kPi) + 0.5) * width - 0.5};
}

double solid_angle(int row, int height, int width) {
  const double theta = kPi * (0.5 - (row + 0.5) / height);
  return (2.0 * kPi / width) * (kPi / height) * std::cos(theta);
}

Rgb sample_bilinear(const EnvMap& env, const Vec3& dir) {
  require(!env.empty(), "sample_bilinear: empty environment");
  if (dot(dir, dir) == 0.0) throw ContractError("sample_bilinear: zero direction");
  const int h = env.height(), w = env.width();
  const PixelCoord p = direction_to_pixel(dir, h, w);

  const double row = std::clamp(p.row, 0.0, static_cast<double>(h - 1));
  const int r0 = std::min(static_cast<int>(std::floor(row)), h - 1);
  const int r1 = std::min(r0 + 1, h - 1);
  const double fr = row - r0;

  const double colf = std::floor(p.col);
  const double fc = p.col - colf;
  int c0 = static_cast<int>(colf) % w;
  if (c0 < 0) c0 += w;
  const int c1 = (c0 + 1) % w;

  const ImageF& img = env.radiance();
  Rgb out;
  float* o = &out.r;
  for (int c = 0; c < 3; ++c) {
    const double top = (1 - fc) * img.at(c0, r0, c) + fc * img.at(c1, r0, c);
    const double bottom = (1 - fc) * img.at(c0, r1, c) + fc * img.at(c1, r1, c);
    o[c] = static_cast<float>((1 - fr) * top + fr * bottom);
  }
  return out;
}

EnvMap rotate_yaw(const EnvMap& env, double angle) {
  require(!env.empty(), "rotate_yaw: empty environment");
  const int w = env.width(), h = env.height();
  double shift = angle / (2.0 * kPi) * w;
  shift -= std::floor(shift / w) * w;
  const double nearest = std::round(shift);
  if (std::abs(shift - nearest) < 1e-6) shift = nearest;
  const int whole = static_cast<int>(std::floor(shift));
  const double frac = shift - whole;

  const ImageF& src = env.radiance();
  ImageF out(w, h, 3, ColorSpace::LinearRgb);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Output column x reads source position x - shift.
      const int a = ((x - whole) % w + w) % w;
      const int b = ((a - 1) % w + w) % w;
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = frac == 0.0 ? src.at(a, y, c)
                                      : static_cast<float>((1 - frac) * src.at(a, y, c) + frac * src.at(b, y, c));
      }
    }
  }
  return EnvMap(std::move(out));
}

EnvMap read_env(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".hdr" || ext == ".HDR") return decode_radiance_hdr(read_file(path));
  if (ext == ".pfm" || ext == ".PFM") return EnvMap::from_radiance(read_pfm(path));
  throw ContractError("unsupported environment extension '" + ext + "' for " + path.string());
}

void write_env(const std::filesystem::path& path, const EnvMap& env) {
  const auto ext = path.extension().string();
  if (ext == ".hdr" || ext == ".HDR") {
    write_file_atomic(path, encode_radiance_hdr(env));
  } else if (ext == ".pfm" || ext == ".PFM") {
    write_pfm(path, env.radiance());
  } else {
    throw ContractError("unsupported environment extension '" + ext + "' for " + path.string());
  }
}

}  // namespace relight::env

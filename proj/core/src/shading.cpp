#include "relight/shading.hpp"

#include <algorithm>
#include <cmath>

#include "relight/codec.hpp"
#include "relight/error.hpp"
#include "relight/parallel.hpp"

namespace relight {

NormalCheck check_normals(const NormalMap& n, double tolerance) {
  NormalCheck out;
  for (int y = 0; y < n.height(); ++y) {
    for (int x = 0; x < n.width(); ++x) {
      if (n.valid.at(x, y) <= 0) continue;
      const Vec3 v = n.at(x, y);
      const double err = std::abs(length(v) - 1.0);
      out.max_length_error = std::max(out.max_length_error, err);
      if (!(err <= tolerance)) ++out.non_unit;
      if (v.z < 0) ++out.back_facing;
    }
  }
  return out;
}

void validate_normals(const NormalMap& n, double tolerance) {
  require(n.normals.channels() == 3, "normals: expected 3 channels");
  require(n.valid.matches(n.normals), "normals: validity mask size differs from normal map");
  const NormalCheck c = check_normals(n, tolerance);
  if (c.non_unit > 0) {
    throw ContractError("normals: " + std::to_string(c.non_unit) +
                        " valid pixels are not unit length (max error " + std::to_string(c.max_length_error) + ")");
  }
}

NormalMap normals_from_image(const ImageF& img, bool from_unorm, bool renormalize) {
  require(img.channels() >= 3, "normals: expected at least 3 channels");
  NormalMap out{ImageF(img.width(), img.height(), 3, ColorSpace::Scalar), Mask(img.width(), img.height())};
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      Vec3 v{img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)};
      if (from_unorm) v = {2 * v.x - 1, 2 * v.y - 1, 2 * v.z - 1};
      const double len = length(v);
      // Quantized mid-gray (the PNG encoding of "no normal") decodes to a
      // near-zero vector; real normals are near unit length.
      if (!(len > (from_unorm ? 0.5 : 1e-6)) || !std::isfinite(len)) continue;
      if (renormalize) v = v * (1.0 / len);
      out.normals.at(x, y, 0) = static_cast<float>(v.x);
      out.normals.at(x, y, 1) = static_cast<float>(v.y);
      out.normals.at(x, y, 2) = static_cast<float>(v.z);
      out.valid.set(x, y, 1.0f);
    }
  }
  return out;
}

NormalMap read_normals(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png" || ext == ".PNG") return normals_from_image(read_png(path), true);
  if (ext == ".pfm" || ext == ".PFM") return normals_from_image(read_pfm(path), false, false);
  throw ContractError("unsupported normal map extension '" + ext + "' for " + path.string());
}

void write_normals(const std::filesystem::path& path, const NormalMap& n) {
  const auto ext = path.extension().string();
  if (ext == ".pfm" || ext == ".PFM") {
    ImageF img = n.normals;
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        if (n.valid.at(x, y) <= 0)
          for (int c = 0; c < 3; ++c) img.at(x, y, c) = 0;
    write_pfm(path, img);
    return;
  }
  if (ext == ".png" || ext == ".PNG") {
    ImageF img(n.width(), n.height(), 3, ColorSpace::Scalar, 0.5f);
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        if (n.valid.at(x, y) > 0)
          for (int c = 0; c < 3; ++c) img.at(x, y, c) = 0.5f * (n.normals.at(x, y, c) + 1.0f);
    write_png(path, img, 16);
    return;
  }
  throw ContractError("unsupported normal map extension '" + ext + "' for " + path.string());
}

ImageF phong_shade(const NormalMap& n, const env::IrradiancePair& irr, const Vec3& view) {
  require(n.normals.channels() == 3, "phong_shade: normals must have 3 channels");
  require(n.valid.matches(n.normals), "phong_shade: validity mask size differs from normal map");
  require(!irr.diffuse.empty() && !irr.specular.empty(), "phong_shade: empty irradiance maps");
  require(dot(view, view) > 0, "phong_shade: zero view vector");
  const Vec3 v = normalize(view);
  const int w = n.width(), h = n.height();
  ImageF out(w, h, 3, ColorSpace::LinearRgb);
  parallel_for(static_cast<std::size_t>(h), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      if (n.valid.at(x, y) <= 0) continue;
      const Vec3 nn = n.at(x, y);
      if (dot(nn, nn) == 0.0) continue;
      const Rgb d = env::sample_bilinear(irr.diffuse, nn);
      const Rgb s = env::sample_bilinear(irr.specular, reflect(v, normalize(nn)));
      out.set_rgb(x, y,
                  {static_cast<float>(kDiffuseWeight * d.r + kSpecularWeight * s.r),
                   static_cast<float>(kDiffuseWeight * d.g + kSpecularWeight * s.g),
                   static_cast<float>(kDiffuseWeight * d.b + kSpecularWeight * s.b)});
    }
  });
  return out;
}

ImageF compose_relit(const ImageF& albedo, const ImageF& shading) {
  require(albedo.width() == shading.width() && albedo.height() == shading.height(),
          "compose_relit: albedo and shading sizes differ");
  require(albedo.channels() == 3 && shading.channels() == 3, "compose_relit: expected 3-channel images");
  ImageF out(albedo.width(), albedo.height(), 3, ColorSpace::LinearRgb);
  auto a = albedo.data();
  auto s = shading.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] * s[i];
  return out;
}

ImageF delight_baseline(const ImageF& image, const ImageF& shading, double eps) {
  require(image.width() == shading.width() && image.height() == shading.height(),
          "delight_baseline: image and shading sizes differ");
  require(image.channels() == 3 && shading.channels() == 3, "delight_baseline: expected 3-channel images");
  require(eps > 0, "delight_baseline: eps must be positive");
  ImageF out(image.width(), image.height(), 3, ColorSpace::LinearRgb);
  auto im = image.data();
  auto s = shading.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double v = im[i] / std::max(static_cast<double>(s[i]), eps);
    o[i] = static_cast<float>(std::clamp(v, 0.0, static_cast<double>(kDelightMax)));
  }
  return out;
}

}  // namespace relight

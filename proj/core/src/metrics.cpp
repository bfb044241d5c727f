#include "relight/metrics.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "relight/error.hpp"

namespace relight {
namespace {

constexpr int kRadius = 5;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_inputs(const ImageF& a, const ImageF& b, const Mask& mask, const char* op) {
  if (!a.same_shape(b)) throw ContractError(std::string(op) + ": image shapes differ");
  if (!mask.matches(a)) throw ContractError(std::string(op) + ": mask size differs from images");
  if (!mask.any()) throw ContractError(std::string(op) + ": mask is empty");
}

std::array<double, 2 * kRadius + 1> gaussian_taps() {
  std::array<double, 2 * kRadius + 1> k{};
  for (int i = -kRadius; i <= kRadius; ++i) k[i + kRadius] = std::exp(-(i * i) / (2 * kSigma * kSigma));
  return k;
}

// Separable Gaussian blur with per-pixel renormalization at the border.
std::vector<double> blur(const std::vector<double>& src, int w, int h) {
  static const auto k = gaussian_taps();
  std::vector<double> tmp(src.size()), out(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0, ws = 0;
      for (int d = -kRadius; d <= kRadius; ++d) {
        const int xx = x + d;
        if (xx < 0 || xx >= w) continue;
        acc += k[d + kRadius] * src[static_cast<std::size_t>(y) * w + xx];
        ws += k[d + kRadius];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc / ws;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0, ws = 0;
      for (int d = -kRadius; d <= kRadius; ++d) {
        const int yy = y + d;
        if (yy < 0 || yy >= h) continue;
        acc += k[d + kRadius] * tmp[static_cast<std::size_t>(yy) * w + x];
        ws += k[d + kRadius];
      }
      out[static_cast<std::size_t>(y) * w + x] = acc / ws;
    }
  }
  return out;
}

}  // namespace

double psnr_masked(const ImageF& a, const ImageF& b, const Mask& mask) {
  check_inputs(a, b, mask, "psnr_masked");
  double err = 0, weight = 0;
  const int ch = a.channels();
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      const double m = mask.at(x, y);
      if (m <= 0) continue;
      for (int c = 0; c < ch; ++c) {
        const double d = static_cast<double>(a.at(x, y, c)) - b.at(x, y, c);
        err += m * d * d;
      }
      weight += m * ch;
    }
  }
  const double mse = err / weight;
  if (!(mse >= 1e-12)) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

double ssim_masked(const ImageF& a, const ImageF& b, const Mask& mask) {
  check_inputs(a, b, mask, "ssim_masked");
  const int w = a.width(), h = a.height();
  const std::size_t n = a.pixel_count();

  // Pixels whose 11x11 window overlaps a nonzero mask pixel.
  std::vector<char> region(n, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y) <= 0) continue;
      for (int yy = std::max(0, y - kRadius); yy <= std::min(h - 1, y + kRadius); ++yy)
        for (int xx = std::max(0, x - kRadius); xx <= std::min(w - 1, x + kRadius); ++xx)
          region[static_cast<std::size_t>(yy) * w + xx] = 1;
    }
  }

  double total = 0;
  std::size_t count = 0;
  std::vector<double> va(n), vb(n), vaa(n), vbb(n), vab(n);
  for (int c = 0; c < a.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const double pa = a.at(x, y, c), pb = b.at(x, y, c);
        va[i] = pa;
        vb[i] = pb;
        vaa[i] = pa * pa;
        vbb[i] = pb * pb;
        vab[i] = pa * pb;
      }
    }
    const auto ma = blur(va, w, h), mb = blur(vb, w, h);
    const auto saa = blur(vaa, w, h), sbb = blur(vbb, w, h), sab = blur(vab, w, h);
    for (std::size_t i = 0; i < n; ++i) {
      if (!region[i]) continue;
      const double var_a = saa[i] - ma[i] * ma[i];
      const double var_b = sbb[i] - mb[i] * mb[i];
      const double cov = sab[i] - ma[i] * mb[i];
      const double num = (2 * ma[i] * mb[i] + kC1) * (2 * cov + kC2);
      const double den = (ma[i] * ma[i] + mb[i] * mb[i] + kC1) * (var_a + var_b + kC2);
      total += num / den;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace relight

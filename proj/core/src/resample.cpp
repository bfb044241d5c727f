#include "relight/resample.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "relight/error.hpp"

namespace relight {
namespace {

struct Tap {
  int index;
  double weight;
};

// Source taps for each output sample along one axis.
std::vector<std::vector<Tap>> box_taps(int src, int dst) {
  std::vector<std::vector<Tap>> taps(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int o = 0; o < dst; ++o) {
    const double lo = o * scale;
    const double hi = (o + 1) * scale;
    const int first = static_cast<int>(std::floor(lo));
    const int last = std::min(src - 1, static_cast<int>(std::ceil(hi)) - 1);
    for (int s = first; s <= last; ++s) {
      const double w = std::min<double>(hi, s + 1) - std::max<double>(lo, s);
      if (w > 0) taps[o].push_back({s, w});
    }
  }
  return taps;
}

std::vector<std::vector<Tap>> bilinear_taps(int src, int dst) {
  std::vector<std::vector<Tap>> taps(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int o = 0; o < dst; ++o) {
    const double s = std::clamp((o + 0.5) * scale - 0.5, 0.0, static_cast<double>(src - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, src - 1);
    const double f = s - i0;
    if (f == 0.0 || i0 == i1) {
      taps[o].push_back({i0, 1.0});
    } else {
      taps[o].push_back({i0, 1.0 - f});
      taps[o].push_back({i1, f});
    }
  }
  return taps;
}

}  // namespace

ImageF resample(const ImageF& img, int new_w, int new_h, ResampleFilter filter) {
  require(new_w >= 1 && new_h >= 1, "resample: target dimensions must be >= 1");
  require(!img.empty(), "resample: empty image");
  if (new_w == img.width() && new_h == img.height()) return img;

  const auto make = filter == ResampleFilter::Box ? box_taps : bilinear_taps;
  const auto tx = make(img.width(), new_w);
  const auto ty = make(img.height(), new_h);
  const int ch = img.channels();

  // Horizontal pass into a double buffer, then vertical.
  std::vector<double> tmp(static_cast<std::size_t>(img.height()) * new_w * ch, 0.0);
  for (int y = 0; y < img.height(); ++y) {
    for (int ox = 0; ox < new_w; ++ox) {
      double wsum = 0;
      double* dst = &tmp[(static_cast<std::size_t>(y) * new_w + ox) * ch];
      for (const Tap& t : tx[ox]) {
        wsum += t.weight;
        for (int c = 0; c < ch; ++c) dst[c] += t.weight * img.at(t.index, y, c);
      }
      for (int c = 0; c < ch; ++c) dst[c] /= wsum;
    }
  }

  ImageF out(new_w, new_h, ch, img.space());
  for (int oy = 0; oy < new_h; ++oy) {
    double wsum = 0;
    for (const Tap& t : ty[oy]) wsum += t.weight;
    for (int ox = 0; ox < new_w; ++ox) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0;
        for (const Tap& t : ty[oy]) acc += t.weight * tmp[(static_cast<std::size_t>(t.index) * new_w + ox) * ch + c];
        out.at(ox, oy, c) = static_cast<float>(acc / wsum);
      }
    }
  }
  return out;
}

ImageF resize(const ImageF& img, int new_w, int new_h) {
  const bool shrink = static_cast<long long>(new_w) * new_h <
                      static_cast<long long>(img.width()) * img.height();
  return resample(img, new_w, new_h, shrink ? ResampleFilter::Box : ResampleFilter::Bilinear);
}

Mask resample(const Mask& mask, int new_w, int new_h, ResampleFilter filter) {
  return Mask::from_image(resample(mask.to_image(), new_w, new_h, filter));
}

}  // namespace relight

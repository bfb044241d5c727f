#include "relight/scribble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "relight/codec.hpp"
#include "relight/color.hpp"
#include "relight/error.hpp"
#include "relight/parallel.hpp"

namespace relight::scribble {

std::size_t ScribbleMap::valid_count() const {
  std::size_t n = 0;
  for (float v : valid.data()) n += v > 0 ? 1 : 0;
  return n;
}

void validate(const SimParams& p) {
  require(p.n_bins >= 2, "SimParams: n_bins must be >= 2");
  require(p.lambda > 0, "SimParams: lambda must be positive");
  require(p.keep_fraction >= 0 && p.keep_fraction <= 0.5, "SimParams: keep_fraction must be in [0, 0.5]");
  require(p.noise_sigma >= 0, "SimParams: noise_sigma must be non-negative");
  require(p.superpixels >= 1, "SimParams: superpixels must be >= 1");
  if (p.fixed_rate) require(*p.fixed_rate >= 0 && *p.fixed_rate <= 1, "SimParams: fixed_rate must be in [0, 1]");
  if (p.bin_shift) {
    require(*p.bin_shift >= 0 && *p.bin_shift < 100.0 / p.n_bins, "SimParams: bin_shift must be in [0, 100 / n_bins)");
  }
}

ImageF quantize_luminance(const ImageF& lab, int n_bins, double shift) {
  require(lab.space() == ColorSpace::Lab, "quantize_luminance: image must be tagged Lab");
  require(n_bins >= 2, "quantize_luminance: n_bins must be >= 2");
  const double w = 100.0 / n_bins;
  require(shift >= 0 && shift < w, "quantize_luminance: shift must be in [0, 100 / n_bins)");
  const int lo = shift < 0.5 * w ? 0 : -1;
  const int hi = lo + n_bins - 1;
  ImageF out = lab;
  auto d = out.data();
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    const double L = std::clamp(static_cast<double>(d[3 * i]), 0.0, 100.0);
    const int b = std::clamp(static_cast<int>(std::floor((L - shift) / w)), lo, hi);
    d[3 * i] = static_cast<float>(shift + (b + 0.5) * w);
  }
  return out;
}

ImageF average_segments(const ImageF& img, const SegmentLabels& labels) {
  require(img.width() == labels.width && img.height() == labels.height, "average_segments: size mismatch");
  const int ch = img.channels();
  std::vector<double> sum(static_cast<std::size_t>(labels.count) * ch, 0.0);
  std::vector<std::int64_t> n(labels.count, 0);
  auto d = img.data();
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    const std::int32_t s = labels.labels[i];
    ++n[s];
    for (int c = 0; c < ch; ++c) sum[static_cast<std::size_t>(s) * ch + c] += d[i * ch + c];
  }
  std::vector<float> mean(sum.size(), 0.0f);
  for (int s = 0; s < labels.count; ++s)
    for (int c = 0; c < ch; ++c)
      if (n[s] > 0) mean[static_cast<std::size_t>(s) * ch + c] = static_cast<float>(sum[static_cast<std::size_t>(s) * ch + c] / n[s]);
  ImageF out(img.width(), img.height(), ch, img.space());
  auto o = out.data();
  for (std::size_t i = 0; i < labels.labels.size(); ++i)
    for (int c = 0; c < ch; ++c) o[i * ch + c] = mean[static_cast<std::size_t>(labels.labels[i]) * ch + c];
  return out;
}

double truncated_exponential(double u, double lambda) {
  return -std::log1p(-u * -std::expm1(-lambda)) / lambda;
}

double truncated_exponential_mean(double lambda) {
  return 1.0 / lambda - std::exp(-lambda) / -std::expm1(-lambda);
}

ScribbleMap sample_segments(const SegmentLabels& labels, const ImageF& avg, const SimParams& p, Rng& rng,
                            const Mask* subject) {
  validate(p);
  require(avg.width() == labels.width && avg.height() == labels.height && avg.channels() == 3,
          "sample_segments: averaged image does not match labels");
  if (subject) require(subject->matches(avg), "sample_segments: subject mask size differs");

  const int count = labels.count;
  std::vector<double> mean_l(count, 0.0);
  std::vector<std::int64_t> n(count, 0), inside(count, 0);
  auto d = avg.data();
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    const std::int32_t s = labels.labels[i];
    mean_l[s] += d[3 * i];
    ++n[s];
    if (subject && subject->data()[i] >= 0.5f) ++inside[s];
  }
  std::vector<std::int32_t> eligible;
  for (int s = 0; s < count; ++s) {
    if (n[s] == 0) continue;
    mean_l[s] /= static_cast<double>(n[s]);
    if (!subject || 2 * inside[s] >= n[s]) eligible.push_back(s);
  }
  if (eligible.empty()) {
    for (int s = 0; s < count; ++s)
      if (n[s] > 0) eligible.push_back(s);
  }

  const std::size_t m = eligible.size();
  const double rate = p.fixed_rate ? *p.fixed_rate : truncated_exponential(rng.uniform(), p.lambda);
  const std::size_t take = std::min(m, static_cast<std::size_t>(std::ceil(rate * static_cast<double>(m) - 1e-9)));

  std::vector<char> keep(count, 0);
  std::vector<std::int32_t> pool = eligible;
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + rng.uniform_index(m - i);
    std::swap(pool[i], pool[j]);
    keep[pool[i]] = 1;
  }

  const std::size_t forced = std::min(m, static_cast<std::size_t>(std::ceil(p.keep_fraction * static_cast<double>(m) - 1e-9)));
  std::vector<std::int32_t> ranked = eligible;
  std::stable_sort(ranked.begin(), ranked.end(), [&](std::int32_t a, std::int32_t b) { return mean_l[a] < mean_l[b]; });
  for (std::size_t i = 0; i < forced; ++i) {
    keep[ranked[i]] = 1;
    keep[ranked[m - 1 - i]] = 1;
  }

  ScribbleMap out{ImageF(avg.width(), avg.height(), 3, ColorSpace::Lab), Mask(avg.width(), avg.height()), false, rate};
  auto o = out.color.data();
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    if (!keep[labels.labels[i]]) continue;
    for (int c = 0; c < 3; ++c) o[3 * i + c] = d[3 * i + c];
    out.valid.set(static_cast<int>(i % avg.width()), static_cast<int>(i / avg.width()), 1.0f);
  }
  return out;
}

ScribbleMap noise_fill(const ScribbleMap& scr, const Mask& subject, double sigma, const Rng& rng) {
  require(subject.matches(scr.color), "noise_fill: subject mask size differs");
  require(sigma >= 0, "noise_fill: sigma must be non-negative");
  ScribbleMap out = scr;
  const int w = scr.width();
  const std::size_t n = scr.color.pixel_count();
  auto o = out.color.data();
  for (std::size_t i = 0; i < n; ++i) {
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    const bool in_subject = subject.at(x, y) >= 0.5f;
    if (in_subject && scr.valid.at(x, y) > 0) continue;
    if (!in_subject) out.valid.set(x, y, 0.0f);
    const double l = kNoiseMeanL + (sigma > 0 ? sigma * rng.normal_at(3 * i) : 0.0);
    const double a = sigma > 0 ? sigma * rng.normal_at(3 * i + 1) : 0.0;
    const double b = sigma > 0 ? sigma * rng.normal_at(3 * i + 2) : 0.0;
    o[3 * i] = static_cast<float>(std::clamp(l, 0.0, 100.0));
    o[3 * i + 1] = static_cast<float>(std::clamp(a, -128.0, 127.0));
    o[3 * i + 2] = static_cast<float>(std::clamp(b, -128.0, 127.0));
  }
  out.noise_filled = true;
  return out;
}

ScribbleMap simulate(const ImageF& shading, const Mask& subject, const SimParams& p, const Rng& rng) {
  validate(p);
  require(shading.space() == ColorSpace::LinearRgb, "simulate: shading must be linear RGB");
  require(subject.matches(shading), "simulate: subject mask size differs from shading");

  const ImageF lab = rgb_to_lab(shading);
  Rng shift_rng = rng.split(1);
  const double width = 100.0 / p.n_bins;
  const double shift = p.bin_shift ? *p.bin_shift : std::min(shift_rng.uniform() * width, std::nextafter(width, 0.0));
  const ImageF quantized = quantize_luminance(lab, p.n_bins, shift);

  SegmentLabels labels;
  if (static_cast<std::size_t>(p.superpixels) >= shading.pixel_count()) {
    labels = pixel_labels(shading.width(), shading.height());
  } else {
    const int k = std::max<int>(1, std::min<std::size_t>(p.superpixels, shading.pixel_count() / 16));
    labels = seeds_segment(quantized, k, p.seeds_levels, p.seeds_iterations, rng.split(2).at(0)).labels;
  }
  const ImageF avg = average_segments(quantized, labels);
  Rng sample_rng = rng.split(3);
  ScribbleMap scr = sample_segments(labels, avg, p, sample_rng, &subject);
  if (p.noise) return noise_fill(scr, subject, p.noise_sigma, rng.split(4));
  for (int y = 0; y < scr.height(); ++y)
    for (int x = 0; x < scr.width(); ++x)
      if (subject.at(x, y) < 0.5f) scr.valid.set(x, y, 0.0f);
  return scr;
}

ScribbleMap simulate(const ImageF& shading, const Mask& subject, const SimParams& p) {
  return simulate(shading, subject, p, Rng(p.seed));
}

ImageF pack_lab(const ImageF& lab) {
  require(lab.channels() == 3, "pack_lab: expected 3 channels");
  ImageF out(lab.width(), lab.height(), 3, ColorSpace::Scalar);
  auto s = lab.data();
  auto o = out.data();
  for (std::size_t i = 0; i < lab.pixel_count(); ++i) {
    o[3 * i] = s[3 * i] / 100.0f;
    o[3 * i + 1] = (s[3 * i + 1] + 128.0f) / 256.0f;
    o[3 * i + 2] = (s[3 * i + 2] + 128.0f) / 256.0f;
  }
  return out;
}

ImageF unpack_lab(const ImageF& packed) {
  require(packed.channels() >= 3, "unpack_lab: expected 3 channels");
  ImageF out(packed.width(), packed.height(), 3, ColorSpace::Lab);
  for (int y = 0; y < packed.height(); ++y)
    for (int x = 0; x < packed.width(); ++x) {
      out.at(x, y, 0) = packed.at(x, y, 0) * 100.0f;
      out.at(x, y, 1) = packed.at(x, y, 1) * 256.0f - 128.0f;
      out.at(x, y, 2) = packed.at(x, y, 2) * 256.0f - 128.0f;
    }
  return out;
}

void write_scribble(const std::filesystem::path& lab_png, const std::filesystem::path& valid_png,
                    const ScribbleMap& scr) {
  require(scr.valid.matches(scr.color), "write_scribble: mask size differs");
  write_png(lab_png, pack_lab(scr.color), 16);
  write_mask(valid_png, scr.valid);
}

ScribbleMap read_scribble(const std::filesystem::path& lab_png, const std::filesystem::path& valid_png) {
  ScribbleMap out;
  out.color = unpack_lab(read_png(lab_png));
  const Mask m = read_mask(valid_png);
  require(m.matches(out.color), "read_scribble: validity mask size differs from " + lab_png.string());
  out.valid = Mask(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) out.valid.set(x, y, m.at(x, y) >= 0.5f ? 1.0f : 0.0f);
  return out;
}

void write_scribble_dir(const std::filesystem::path& dir, const ScribbleMap& scr) {
  std::filesystem::create_directories(dir);
  write_scribble(dir / "scribble_lab.png", dir / "scribble_valid.png", scr);
}

ScribbleMap read_scribble_dir(const std::filesystem::path& dir) {
  return read_scribble(dir / "scribble_lab.png", dir / "scribble_valid.png");
}

}  // namespace relight::scribble

#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>

#include "relight/image.hpp"
#include "relight/rng.hpp"
#include "relight/seeds.hpp"

namespace relight::scribble {

// Sparse Lab shading hints. `color` is meaningful where valid = 1 and, when
// noise_filled is set, holds Gaussian noise elsewhere.
struct ScribbleMap {
  ImageF color;  // Lab
  Mask valid;
  bool noise_filled = false;
  // Sampling rate drawn by sample_segments; NaN when unknown (e.g. loaded).
  double rate = std::numeric_limits<double>::quiet_NaN();

  int width() const noexcept { return color.width(); }
  int height() const noexcept { return color.height(); }
  std::size_t valid_count() const;
};

struct SimParams {
  int n_bins = 25;
  // Random in [0, 100 / n_bins) when unset.
  std::optional<double> bin_shift;
  // A value >= the pixel count gives one segment per pixel.
  int superpixels = 400;
  double lambda = 3.0;
  double keep_fraction = 0.05;
  double noise_sigma = 10.0;
  bool noise = true;
  // Overrides the truncated-exponential draw.
  std::optional<double> fixed_rate;
  int seeds_levels = kSeedsDefaultLevels;
  int seeds_iterations = kSeedsDefaultIterations;
  std::uint64_t seed = 0;
};

// Throws ContractError on n_bins < 2, lambda <= 0, keep_fraction outside
// [0, 0.5], negative sigma, superpixels < 1 or fixed_rate outside [0, 1].
void validate(const SimParams& p);

// L is clamped to [0, 100] and snapped to the center p + (b + 1/2) w of its
// bin, w = 100 / n_bins. Only centers inside [0, 100) are used, so an image
// takes at most n_bins distinct L values. a and b pass through.
ImageF quantize_luminance(const ImageF& lab, int n_bins, double shift);

// Every pixel replaced by the mean of its segment.
ImageF average_segments(const ImageF& img, const SegmentLabels& labels);

// Inverse CDF of the exponential truncated to [0, 1].
double truncated_exponential(double u, double lambda);
double truncated_exponential_mean(double lambda);

// Draws a rate r (or uses p.fixed_rate), selects ceil(r * n) of the n
// eligible segments uniformly, and always adds the ceil(keep_fraction * n)
// darkest and brightest segments by mean L (ties by id). With a subject mask,
// eligible segments are those with at least half their pixels inside it.
ScribbleMap sample_segments(const SegmentLabels& labels, const ImageF& avg, const SimParams& p, Rng& rng,
                            const Mask* subject = nullptr);

inline constexpr float kNoiseMeanL = 50.0f;

// Pixels that are invalid or outside the subject get L ~ N(50, sigma),
// a, b ~ N(0, sigma), clamped to L in [0, 100] and a, b in [-128, 127].
// Pixels outside the subject are marked invalid. Noise for pixel i depends
// only on (rng, i).
ScribbleMap noise_fill(const ScribbleMap& scr, const Mask& subject, double sigma, const Rng& rng);

// rgb_to_lab -> quantize_luminance -> seeds_segment -> average_segments ->
// sample_segments -> noise_fill, with independent child streams of `rng`.
ScribbleMap simulate(const ImageF& shading, const Mask& subject, const SimParams& p, const Rng& rng);
ScribbleMap simulate(const ImageF& shading, const Mask& subject, const SimParams& p);

// Raster scribble as two PNGs: 16-bit RGB with L / 100, (a + 128) / 256,
// (b + 128) / 256, and an 8-bit validity mask.
void write_scribble(const std::filesystem::path& lab_png, const std::filesystem::path& valid_png,
                    const ScribbleMap& scr);
ScribbleMap read_scribble(const std::filesystem::path& lab_png, const std::filesystem::path& valid_png);

// Directory form: scribble_lab.png + scribble_valid.png.
void write_scribble_dir(const std::filesystem::path& dir, const ScribbleMap& scr);
ScribbleMap read_scribble_dir(const std::filesystem::path& dir);

ImageF pack_lab(const ImageF& lab);
ImageF unpack_lab(const ImageF& packed);

}  // namespace relight::scribble

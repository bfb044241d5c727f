#pragma once

#include <cstdint>
#include <vector>

#include "relight/image.hpp"

namespace relight::scribble {

// Dense per-pixel segment ids in [0, count), row-major.
struct SegmentLabels {
  int width = 0;
  int height = 0;
  int count = 0;
  std::vector<std::int32_t> labels;

  std::int32_t at(int x, int y) const noexcept { return labels[static_cast<std::size_t>(y) * width + x]; }
};

// Regular nx x ny grid with nx * ny close to k.
SegmentLabels grid_labels(int width, int height, int k);

// One segment per pixel.
SegmentLabels pixel_labels(int width, int height);

inline constexpr int kSeedsBinsPerChannel = 5;
inline constexpr int kSeedsDefaultLevels = 4;
inline constexpr int kSeedsDefaultIterations = 8;

struct SeedsResult {
  SegmentLabels labels;
  // Histogram energy of the initial grid, then after every sweep.
  std::vector<double> energy;
  std::size_t block_moves = 0;
  std::size_t pixel_moves = 0;
};

// SEEDS superpixels on a Lab image. Starts from grid_labels(w, h, target_k),
// then runs up to `levels` block-exchange sweeps (coarse to fine) followed by
// up to `iterations` pixel-exchange sweeps. A move is taken only if it
// strictly increases sum_seg sum_bin h^2 / |seg| over a 5x5x5 histogram of the
// observed Lab range, and only if both segments stay 4-connected and nonempty.
// The seed fixes the visiting order.
SeedsResult seeds_segment(const ImageF& lab, int target_k, int levels = kSeedsDefaultLevels,
                          int iterations = kSeedsDefaultIterations, std::uint64_t seed = 0);

// Histogram bin (0..124) per pixel over the observed per-channel range.
std::vector<std::int32_t> seeds_bins(const ImageF& lab);

double histogram_energy(const std::vector<std::int32_t>& bins, const SegmentLabels& labels);

}  // namespace relight::scribble

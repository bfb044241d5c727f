#pragma once

#include "relight/image.hpp"

namespace relight {

inline constexpr double kPsnrCapDb = 99.0;

// 10 log10(1 / MSE) over mask-weighted pixels and all channels; peak is 1.0.
// Returns kPsnrCapDb when the MSE is below 1e-12.
double psnr_masked(const ImageF& a, const ImageF& b, const Mask& mask);

// Mean single-scale SSIM (11x11 Gaussian window, sigma 1.5, k1 = 0.01,
// k2 = 0.03, dynamic range 1). The window is truncated and renormalized at the
// border. Averaged over channels and over every pixel whose window touches a
// nonzero mask pixel.
double ssim_masked(const ImageF& a, const ImageF& b, const Mask& mask);

}  // namespace relight

#pragma once

#include "relight/image.hpp"

namespace relight {

enum class ResampleFilter {
  Box,       // exact area-overlap average; energy preserving
  Bilinear,  // pixel-center aligned, edge clamped
};

// Resize to new_w x new_h. Same size returns a bit-identical copy.
ImageF resample(const ImageF& img, int new_w, int new_h, ResampleFilter filter);

// Box when shrinking, bilinear when enlarging (per axis pair, decided by area).
ImageF resize(const ImageF& img, int new_w, int new_h);

Mask resample(const Mask& mask, int new_w, int new_h, ResampleFilter filter);

}  // namespace relight

#pragma once

#include <optional>

#include "relight/completion.hpp"
#include "relight/skinfill.hpp"

namespace relight {

// Decoded inputs of one portrait. All images share one size; `skin` may be
// empty. `albedo` is linear RGB; when a bundle has none, the image itself is
// used.
struct Portrait {
  ImageF image;  // linear RGB
  NormalMap normals;
  Mask subject;
  Mask skin;
  ImageF albedo;

  int width() const noexcept { return image.width(); }
  int height() const noexcept { return image.height(); }
};

// Throws ContractError naming the first field whose size or contents are
// inconsistent.
void validate(const Portrait& p);

struct RelightResult {
  ImageF relit;    // linear RGB
  ImageF shading;  // linear RGB
  completion::CompletionReport completion;
  std::optional<skin::ToneShiftReport> tone;
};

// Tone shift (if a tone is given and a skin mask exists), shading
// completion, then albedo * shading inside the subject and the input image
// outside it.
RelightResult relight_portrait(const Portrait& portrait, const completion::PreparedGraph& graph,
                               const scribble::ScribbleMap& scr, const std::optional<Rgb>& linear_tone,
                               const completion::CompletionParams& params);

RelightResult relight_portrait(const Portrait& portrait, const scribble::ScribbleMap& scr,
                               const std::optional<Rgb>& linear_tone, const completion::CompletionParams& params = {});

}  // namespace relight

#include "relight/pipeline.hpp"

#include "relight/error.hpp"

namespace relight {

void validate(const Portrait& p) {
  require(!p.image.empty() && p.image.channels() == 3, "image: expected a 3-channel image");
  require(p.normals.normals.width() == p.width() && p.normals.normals.height() == p.height(),
          "normals: size differs from image");
  require(p.subject.matches(p.image), "subject: size differs from image");
  require(p.skin.empty() || p.skin.matches(p.image), "skin: size differs from image");
  require(p.albedo.empty() || (p.albedo.same_shape(p.image)), "albedo: size differs from image");
  require(p.subject.any(), "subject: mask is empty");
  validate_normals(p.normals);
}

RelightResult relight_portrait(const Portrait& portrait, const completion::PreparedGraph& graph,
                               const scribble::ScribbleMap& scr, const std::optional<Rgb>& linear_tone,
                               const completion::CompletionParams& params) {
  RelightResult out;
  const ImageF& base = portrait.albedo.empty() ? portrait.image : portrait.albedo;
  ImageF albedo;
  if (linear_tone && !portrait.skin.empty() && portrait.skin.any()) {
    skin::ToneShiftReport rep;
    albedo = skin::apply_skin_tone(base, portrait.skin, linear_tone, &rep);
    out.tone = rep;
  } else {
    albedo = base;
  }
  completion::CompletionResult c = completion::complete(scr, graph, params);
  out.completion = c.report;
  out.shading = std::move(c.shading);
  out.relit = compose_relit(albedo, out.shading);
  for (int y = 0; y < portrait.height(); ++y)
    for (int x = 0; x < portrait.width(); ++x) {
      const float m = portrait.subject.at(x, y);
      if (m >= 1.0f) continue;
      for (int ch = 0; ch < 3; ++ch)
        out.relit.at(x, y, ch) = m * out.relit.at(x, y, ch) + (1.0f - m) * portrait.image.at(x, y, ch);
    }
  return out;
}

RelightResult relight_portrait(const Portrait& portrait, const scribble::ScribbleMap& scr,
                               const std::optional<Rgb>& linear_tone, const completion::CompletionParams& params) {
  const completion::PreparedGraph g = completion::prepare_graph(portrait.normals, portrait.subject, params);
  return relight_portrait(portrait, g, scr, linear_tone, params);
}

}  // namespace relight

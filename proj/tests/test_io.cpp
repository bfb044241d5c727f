#include <iterator>

#include "doctest.h"
#include "relight/codec.hpp"
#include "relight/error.hpp"
#include "relight_app/io.hpp"
#include "support.hpp"

using namespace relight;
using namespace relight::app;

namespace {

scribble::ScribbleMap sparse(int w, int h) {
  scribble::ScribbleMap s{ImageF(w, h, 3, ColorSpace::Lab), Mask(w, h)};
  for (int x = 2; x < 7; ++x) {
    s.color.set_rgb(x, 1, {40, 5, -5});
    s.valid.set(x, 1, 1);
  }
  s.color.set_rgb(7, 1, {41, 5, -5});
  s.valid.set(7, 1, 1);
  s.color.set_rgb(0, 3, {99.5f, -128, 127});
  s.valid.set(0, 3, 1);
  return s;
}

}  // namespace

TEST_CASE("fnv1a") {
  const std::uint8_t a[] = {'a'};
  CHECK(fnv1a_hex({}) == "cbf29ce484222325");
  CHECK(fnv1a_hex(a) == "af63dc4c8601ec8c");
}

TEST_CASE("scribble runs round trip") {
  const auto s = sparse(10, 5);
  const json j = encode_scribble_runs(s);
  CHECK(j["width"] == 10);
  CHECK(j["runs"].size() == 3);
  CHECK(j["runs"][0] == json::array({1, 2, 5, 40, 5, -5}));
  const auto back = decode_scribble_runs(j, 10, 5);
  CHECK(back.valid == s.valid);
  CHECK(back.color == s.color);
  CHECK(encode_scribble_runs(back) == j);

  // Later runs overwrite earlier ones.
  const json overlap = {{"width", 4}, {"height", 1}, {"runs", {{0, 0, 3, 10, 0, 0}, {0, 1, 1, 20, 0, 0}}}};
  const auto o = decode_scribble_runs(overlap, 4, 1);
  CHECK(o.color.at(1, 0, 0) == 20.0f);
  CHECK(o.valid_count() == 3);
}

TEST_CASE("scribble runs reject bad input") {
  auto bad = [](const json& j) { CHECK_THROWS_AS(decode_scribble_runs(j, 10, 5), ContractError); };
  bad(json::array());
  bad({{"width", 10}, {"height", 5}});
  bad({{"width", 10}, {"height", 5}, {"runs", json::array()}, {"extra", 1}});
  bad({{"width", 9}, {"height", 5}, {"runs", json::array()}});
  bad({{"width", 10}, {"height", 5}, {"runs", {{0, 0, 1, 50, 0}}}});
  bad({{"width", 10}, {"height", 5}, {"runs", {{5, 0, 1, 50, 0, 0}}}});
  bad({{"width", 10}, {"height", 5}, {"runs", {{0, 8, 3, 50, 0, 0}}}});
  bad({{"width", 10}, {"height", 5}, {"runs", {{0, 0, 0, 50, 0, 0}}}});
  bad({{"width", 10}, {"height", 5}, {"runs", {{0, 0, 1, 101, 0, 0}}}});
  bad({{"width", 10}, {"height", 5}, {"runs", {{0, 0, 1, 50, -200, 0}}}});
  bad({{"width", 10}, {"height", 5}, {"runs", {{0, 0.5, 1, 50, 0, 0}}}});
  bad({{"width", 10}, {"height", 5}, {"runs", {{0, 0, 1, "50", 0, 0}}}});
  CHECK(decode_scribble_runs({{"width", 10}, {"height", 5}, {"runs", json::array()}}, 10, 5).valid_count() == 0);
}

TEST_CASE("parameter JSON") {
  completion::CompletionParams p;
  p.data_weight = 7;
  p.connectivity = 8;
  CHECK(to_json(completion_params_from_json(to_json(p))) == to_json(p));
  CHECK(completion_params_from_json({{"solve_h", 64}}).solve_h == 64);
  CHECK_THROWS_AS(completion_params_from_json({{"kappa", 1}}), ContractError);
  CHECK_THROWS_AS(completion_params_from_json({{"connectivity", 6}}), ContractError);
  CHECK_THROWS_AS(completion_params_from_json({{"tol", "small"}}), ContractError);
  CHECK_THROWS_AS(completion_params_from_json(json::array()), ContractError);

  scribble::SimParams s;
  s.bin_shift = 1.5;
  s.fixed_rate = 0.25;
  const auto back = sim_params_from_json(to_json(s));
  CHECK(back.bin_shift == 1.5);
  CHECK(back.fixed_rate == 0.25);
  CHECK(to_json(back) == to_json(s));
  CHECK(!sim_params_from_json(to_json(scribble::SimParams{})).bin_shift);
  CHECK_THROWS_AS(sim_params_from_json({{"bins", 3}}), ContractError);
}

TEST_CASE("color decoding") {
  const ImageF lin = test::random_image(6, 4, 3, ColorSpace::LinearRgb, 2);
  const Bytes png = encode_srgb_png(lin);
  CHECK(is_png(png));
  const ImageF back = decode_color(png);
  CHECK(back.space() == ColorSpace::LinearRgb);
  CHECK(test::max_abs_diff(back, lin) < 0.01);
  CHECK(encode_srgb_png(lin) == png);
  const Bytes pfm = encode_pfm(lin);
  CHECK(is_pfm(pfm));
  CHECK(decode_color(pfm) == lin);
  const std::uint8_t junk[] = {1, 2, 3, 4};
  CHECK_THROWS_AS(decode_color(junk), DecodeError);
  CHECK_THROWS_AS(decode_mask(junk), DecodeError);
}

TEST_CASE("json and stack files") {
  test::TempDir dir;
  write_json_atomic(dir / "a.json", {{"k", 1}});
  CHECK(read_json(dir / "a.json")["k"] == 1);
  CHECK(std::distance(std::filesystem::directory_iterator(dir.path()), std::filesystem::directory_iterator()) == 1);

  olat::SceneSpec spec;
  spec.width = spec.height = 16;
  spec.albedo = olat::AlbedoKind::Checker;
  const auto st = olat::synth_olat(spec, olat::make_light_rig(6));
  write_stack(dir / "stack", st);
  CHECK(std::filesystem::exists(dir / "stack" / "stack.json"));
  const auto back = read_stack(dir / "stack");
  CHECK(back.rig.size() == 6);
  CHECK(back.images[3] == st.images[3]);
  CHECK(back.subject == st.subject);
  CHECK(back.z == doctest::Approx(st.z));
  for (std::size_t k = 0; k < 6; ++k) CHECK(length(back.rig.directions[k] - st.rig.directions[k]) < 1e-12);
}

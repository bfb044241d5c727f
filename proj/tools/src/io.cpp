#include "relight_app/io.hpp"

#include <cmath>
#include <cstdio>

#include "relight/color.hpp"
#include "relight/error.hpp"

namespace relight::app {
namespace {

ImageF to_rgb3(const ImageF& img, ColorSpace space) {
  ImageF out(img.width(), img.height(), 3, space);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y, img.channels() >= 3 ? c : 0);
  return out;
}

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ContractError("field '" + key + "' has the wrong type");
  }
}

double get_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ContractError("field '" + key + "' must be a number");
  return v.get<double>();
}

int get_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ContractError("field '" + key + "' must be an integer");
  return v.get<int>();
}

}  // namespace

std::string fnv1a_hex(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_hash(const std::filesystem::path& path) { return fnv1a_hex(read_file(path)); }

bool is_png(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::equal(sig, sig + 8, bytes.begin());
}

bool is_pfm(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == 'F' || bytes[1] == 'f');
}

ImageF decode_color(std::span<const std::uint8_t> bytes) {
  if (is_png(bytes)) return srgb_to_linear(to_rgb3(decode_png(bytes), ColorSpace::Srgb));
  if (is_pfm(bytes)) return to_rgb3(decode_pfm(bytes), ColorSpace::LinearRgb);
  throw DecodeError("unrecognized image format (expected PNG or PFM)", 0);
}

ImageF load_color(const std::filesystem::path& path) { return decode_color(read_file(path)); }

Mask decode_mask(std::span<const std::uint8_t> bytes) {
  if (is_png(bytes)) return Mask::from_image(decode_png(bytes));
  if (is_pfm(bytes)) return Mask::from_image(decode_pfm(bytes));
  throw DecodeError("unrecognized mask format (expected PNG or PFM)", 0);
}

NormalMap decode_normals(std::span<const std::uint8_t> bytes) {
  if (is_png(bytes)) return normals_from_image(decode_png(bytes), true);
  if (is_pfm(bytes)) return normals_from_image(decode_pfm(bytes), false, false);
  throw DecodeError("unrecognized normal map format (expected PNG or PFM)", 0);
}

Bytes encode_srgb_png(const ImageF& linear, int compression_level) {
  ImageF img = linear;
  img.set_space(ColorSpace::LinearRgb);
  return encode_png(linear_to_srgb(img), 8, compression_level);
}

void write_color(const std::filesystem::path& path, const ImageF& linear) {
  const auto ext = path.extension().string();
  if (ext == ".pfm" || ext == ".PFM") {
    write_pfm(path, linear);
  } else if (ext == ".png" || ext == ".PNG") {
    write_file_atomic(path, encode_srgb_png(linear));
  } else {
    throw ContractError("unsupported output extension '" + ext + "' for " + path.string());
  }
}

void write_json_atomic(const std::filesystem::path& path, const json& j) {
  const std::string s = j.dump(2) + "\n";
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

json read_json(const std::filesystem::path& path) {
  const Bytes b = read_file(path);
  try {
    return json::parse(b.begin(), b.end());
  } catch (const json::parse_error& e) {
    throw DecodeError(std::string("invalid JSON in ") + path.string(), e.byte);
  }
}

completion::CompletionParams completion_params_from_json(const json& j, completion::CompletionParams p) {
  if (!j.is_object()) throw ContractError("params must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "data_weight") p.data_weight = get_number(v, key);
    else if (key == "normal_sharpness") p.normal_sharpness = get_number(v, key);
    else if (key == "connectivity") p.connectivity = get_int(v, key);
    else if (key == "solve_h") p.solve_h = get_int(v, key);
    else if (key == "tol") p.tol = get_number(v, key);
    else if (key == "max_iter") p.max_iter = get_int(v, key);
    else throw ContractError("unknown field 'params." + key + "'");
  }
  completion::validate(p);
  return p;
}

json to_json(const completion::CompletionParams& p) {
  return {{"data_weight", p.data_weight}, {"normal_sharpness", p.normal_sharpness},
          {"connectivity", p.connectivity}, {"solve_h", p.solve_h},
          {"tol", p.tol},                   {"max_iter", p.max_iter}};
}

json to_json(const completion::CompletionReport& r) {
  return {{"iterations", {r.iterations[0], r.iterations[1], r.iterations[2]}},
          {"residual", {r.residual[0], r.residual[1], r.residual[2]}},
          {"solve_width", r.solve_w},
          {"solve_height", r.solve_h},
          {"nodes", r.nodes},
          {"constrained_nodes", r.constrained_nodes}};
}

scribble::SimParams sim_params_from_json(const json& j, scribble::SimParams p) {
  if (!j.is_object()) throw ContractError("simulation params must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "n_bins") p.n_bins = get_int(v, key);
    else if (key == "bin_shift") p.bin_shift = v.is_null() ? std::nullopt : std::optional(get_number(v, key));
    else if (key == "superpixels") p.superpixels = get_int(v, key);
    else if (key == "lambda") p.lambda = get_number(v, key);
    else if (key == "keep_fraction") p.keep_fraction = get_number(v, key);
    else if (key == "noise_sigma") p.noise_sigma = get_number(v, key);
    else if (key == "noise") p.noise = get_as<bool>(v, key);
    else if (key == "fixed_rate") p.fixed_rate = v.is_null() ? std::nullopt : std::optional(get_number(v, key));
    else if (key == "seeds_levels") p.seeds_levels = get_int(v, key);
    else if (key == "seeds_iterations") p.seeds_iterations = get_int(v, key);
    else if (key == "seed") p.seed = get_as<std::uint64_t>(v, key);
    else throw ContractError("unknown simulation field '" + key + "'");
  }
  scribble::validate(p);
  return p;
}

json to_json(const scribble::SimParams& p) {
  return {{"n_bins", p.n_bins},
          {"bin_shift", p.bin_shift ? json(*p.bin_shift) : json(nullptr)},
          {"superpixels", p.superpixels},
          {"lambda", p.lambda},
          {"keep_fraction", p.keep_fraction},
          {"noise_sigma", p.noise_sigma},
          {"noise", p.noise},
          {"fixed_rate", p.fixed_rate ? json(*p.fixed_rate) : json(nullptr)},
          {"seeds_levels", p.seeds_levels},
          {"seeds_iterations", p.seeds_iterations},
          {"seed", p.seed}};
}

json encode_scribble_runs(const scribble::ScribbleMap& scr) {
  json runs = json::array();
  for (int y = 0; y < scr.height(); ++y) {
    int x = 0;
    while (x < scr.width()) {
      if (scr.valid.at(x, y) <= 0) {
        ++x;
        continue;
      }
      const float L = scr.color.at(x, y, 0), a = scr.color.at(x, y, 1), b = scr.color.at(x, y, 2);
      int end = x + 1;
      while (end < scr.width() && scr.valid.at(end, y) > 0 && scr.color.at(end, y, 0) == L &&
             scr.color.at(end, y, 1) == a && scr.color.at(end, y, 2) == b)
        ++end;
      runs.push_back({y, x, end - x, L, a, b});
      x = end;
    }
  }
  return {{"width", scr.width()}, {"height", scr.height()}, {"runs", std::move(runs)}};
}

scribble::ScribbleMap decode_scribble_runs(const json& j, int width, int height) {
  if (!j.is_object()) throw ContractError("scribble must be an object");
  for (const auto& [key, v] : j.items())
    if (key != "width" && key != "height" && key != "runs") throw ContractError("unknown field 'scribble." + key + "'");
  if (!j.contains("width") || !j.contains("height") || !j.contains("runs"))
    throw ContractError("scribble requires width, height and runs");
  const int w = get_int(j["width"], "scribble.width"), h = get_int(j["height"], "scribble.height");
  if (w != width || h != height) {
    throw ContractError("scribble size " + std::to_string(w) + "x" + std::to_string(h) + " differs from session " +
                        std::to_string(width) + "x" + std::to_string(height));
  }
  const json& runs = j["runs"];
  if (!runs.is_array()) throw ContractError("field 'scribble.runs' must be an array");
  scribble::ScribbleMap scr{ImageF(w, h, 3, ColorSpace::Lab), Mask(w, h)};
  std::size_t index = 0;
  for (const json& r : runs) {
    const std::string where = "scribble.runs[" + std::to_string(index++) + "]";
    if (!r.is_array() || r.size() != 6) throw ContractError(where + " must be [y, x, length, L, a, b]");
    const int y = get_int(r[0], where), x = get_int(r[1], where), n = get_int(r[2], where);
    const double L = get_number(r[3], where), a = get_number(r[4], where), b = get_number(r[5], where);
    if (y < 0 || y >= h || x < 0 || n < 1 || x + n > w) throw ContractError(where + " lies outside the image");
    if (!(L >= 0 && L <= 100) || !(a >= -128 && a <= 128) || !(b >= -128 && b <= 128))
      throw ContractError(where + " has a Lab value out of range");
    for (int k = x; k < x + n; ++k) {
      scr.color.at(k, y, 0) = static_cast<float>(L);
      scr.color.at(k, y, 1) = static_cast<float>(a);
      scr.color.at(k, y, 2) = static_cast<float>(b);
      scr.valid.set(k, y, 1.0f);
    }
  }
  return scr;
}

void write_stack(const std::filesystem::path& dir, const olat::OlatStack& st) {
  std::filesystem::create_directories(dir);
  json lights = json::array();
  for (std::size_t k = 0; k < st.rig.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "light_%03zu.pfm", k);
    write_pfm(dir / name, st.images[k]);
    const Vec3& d = st.rig.directions[k];
    lights.push_back({{"direction", {d.x, d.y, d.z}}, {"weight", st.rig.weights[k]}, {"image", name}});
  }
  write_pfm(dir / "albedo.pfm", st.albedo_gt);
  write_normals(dir / "normals.pfm", st.normals_gt);
  write_mask(dir / "subject.png", st.subject);
  const auto& s = st.scene;
  json scene = {{"geometry", olat::to_string(s.geometry)},
                {"width", s.width},
                {"height", s.height},
                {"albedo", olat::to_string(s.albedo)},
                {"color", {s.color.r, s.color.g, s.color.b}},
                {"color2", {s.color2.r, s.color2.g, s.color2.b}},
                {"checker_px", s.checker_px},
                {"exponent", s.exponent},
                {"seed", s.seed}};
  write_json_atomic(dir / "stack.json",
                    {{"schema_version", kSchemaVersion}, {"z", st.z}, {"scene", scene}, {"lights", lights}});
}

olat::OlatStack read_stack(const std::filesystem::path& dir) {
  const json m = read_json(dir / "stack.json");
  try {
    olat::OlatStack st;
    const json& s = m.at("scene");
    st.scene.geometry = olat::parse_geometry(s.at("geometry").get<std::string>());
    st.scene.width = s.at("width").get<int>();
    st.scene.height = s.at("height").get<int>();
    st.scene.albedo = olat::parse_albedo(s.at("albedo").get<std::string>());
    const auto c1 = s.at("color").get<std::vector<float>>(), c2 = s.at("color2").get<std::vector<float>>();
    if (c1.size() != 3 || c2.size() != 3) throw ContractError("manifest: colors must have 3 entries");
    st.scene.color = {c1[0], c1[1], c1[2]};
    st.scene.color2 = {c2[0], c2[1], c2[2]};
    st.scene.checker_px = s.at("checker_px").get<int>();
    st.scene.exponent = s.at("exponent").get<double>();
    st.scene.seed = s.at("seed").get<std::uint64_t>();
    st.z = m.at("z").get<double>();
    for (const json& l : m.at("lights")) {
      const auto d = l.at("direction").get<std::vector<double>>();
      if (d.size() != 3) throw ContractError("manifest: light direction must have 3 entries");
      st.rig.directions.push_back({d[0], d[1], d[2]});
      st.rig.weights.push_back(l.at("weight").get<double>());
      st.images.push_back(read_pfm(dir / l.at("image").get<std::string>()));
    }
    olat::validate(st.rig);
    st.albedo_gt = read_pfm(dir / "albedo.pfm");
    st.albedo_gt.set_space(ColorSpace::LinearRgb);
    st.normals_gt = read_normals(dir / "normals.pfm");
    st.subject = read_mask(dir / "subject.png");
    for (ImageF& img : st.images) img.set_space(ColorSpace::LinearRgb);
    return st;
  } catch (const json::exception& e) {
    throw ContractError(std::string("malformed stack manifest in ") + dir.string() + ": " + e.what());
  }
}

}  // namespace relight::app

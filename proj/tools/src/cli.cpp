#include "relight_app/cli.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "relight/color.hpp"
#include "relight/envmap.hpp"
#include "relight/error.hpp"
#include "relight/metrics.hpp"
#include "relight/parallel.hpp"
#include "relight/pipeline.hpp"
#include "relight/resample.hpp"
#include "relight_app/io.hpp"
#include "relight_app/service.hpp"

#ifndef RELIGHT_VERSION
#define RELIGHT_VERSION "0.0.0"
#endif

namespace relight::app {
namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Hash of a file, or of every regular file below a directory in name order.
std::string path_hash(const fs::path& p) {
  if (!fs::is_directory(p)) return file_hash(p);
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(p))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string acc;
  for (const auto& f : files) acc += fs::relative(f, p).generic_string() + ":" + file_hash(f) + "\n";
  return fnv1a_hex(std::span(reinterpret_cast<const std::uint8_t*>(acc.data()), acc.size()));
}

json rgb_json(const Rgb& c) { return json::array({c.r, c.g, c.b}); }

struct Command {
  CLI::App* app = nullptr;
  std::vector<std::string> inputs;          // long names of input path options
  std::map<std::string, const bool*> flags;  // long name -> bound value
  json extra = json::object();              // command-specific manifest fields
  std::function<json()> run;                // returns summary fields

  CLI::Option* input(const std::string& name, std::string& target, const std::string& help, bool dir = false) {
    inputs.push_back(name.substr(0, name.find(',')).substr(2));
    auto* opt = app->add_option(name, target, help);
    opt->check(dir ? CLI::Validator(CLI::ExistingDirectory) : CLI::Validator(CLI::ExistingPath));
    return opt;
  }

  CLI::Option* flag(const std::string& name, bool& target, const std::string& help) {
    flags[name.substr(2)] = &target;
    return app->add_flag(name, target, help);
  }

  json manifest() const {
    json config = json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty()) continue;
      const std::string name = opt->get_lnames().front();
      if (name == "help") continue;
      if (auto it = flags.find(name); it != flags.end()) {
        config[name] = *it->second;
        continue;
      }
      const std::string v = opt->count() ? opt->results().back() : opt->get_default_str();
      config[name] = (v.empty() || v == "nan") ? json(nullptr) : json(v);
    }
    json in = json::object();
    for (const auto& name : inputs) {
      const CLI::Option* opt = app->get_option_no_throw("--" + name);
      if (!opt || opt->count() == 0) continue;
      const std::string path = opt->results().back();
      in[name] = {{"path", path}, {"fnv1a", path_hash(path)}};
    }
    json m = {{"schema_version", kSchemaVersion},
              {"command", app->get_name()},
              {"version", RELIGHT_VERSION},
              {"config", config},
              {"inputs", in}};
    if (config.contains("seed") && config["seed"].is_string()) m["seed"] = std::stoull(config["seed"].get<std::string>());
    for (const auto& [k, v] : extra.items()) m[k] = v;
    return m;
  }
};

// Manifest path for a file output (`relit.png` -> `relit.png.json`) or a
// directory output (`dir/manifest.json`).
fs::path manifest_path(const fs::path& out, bool is_dir) {
  return is_dir ? out / "manifest.json" : fs::path(out.string() + ".json");
}

std::vector<std::string> expand_config(std::vector<std::string> args, const std::set<std::string>& subcommands) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--threads") {
      ++i;
      continue;
    }
    if (args[i].empty() || args[i][0] == '-') continue;
    if (!subcommands.count(args[i])) throw UsageError("unknown subcommand '" + args[i] + "'");
    break;
  }
  auto it = std::find_if(args.begin(), args.end(),
                         [](const std::string& a) { return a == "--config" || a.rfind("--config=", 0) == 0; });
  if (it == args.end()) return args;
  std::string path;
  if (*it == "--config") {
    if (std::next(it) == args.end()) throw UsageError("--config requires a file argument");
    path = *std::next(it);
    args.erase(it, it + 2);
  } else {
    path = it->substr(9);
    args.erase(it);
  }
  if (!fs::is_regular_file(path)) throw UsageError("--config: file not found: " + path);
  json j;
  try {
    j = read_json(path);
  } catch (const DecodeError& e) {
    throw UsageError(std::string("--config: ") + e.what());
  }
  if (j.is_object() && j.contains("config") && j.contains("command")) j = j["config"];
  if (!j.is_object()) throw UsageError("--config: " + path + " must hold a JSON object");

  std::vector<std::string> expanded;
  auto push = [&](const std::string& key, const json& v) {
    if (v.is_null()) return;
    if (v.is_boolean()) expanded.push_back("--" + key + "=" + (v.get<bool>() ? "true" : "false"));
    else if (v.is_string()) expanded.push_back("--" + key + "=" + v.get<std::string>());
    else if (v.is_number()) expanded.push_back("--" + key + "=" + v.dump());
    else throw UsageError("--config: value of '" + key + "' must be a scalar");
  };
  for (const auto& [key, v] : j.items()) push(key, v);

  auto sub = std::find_if(args.begin(), args.end(), [&](const std::string& a) { return subcommands.count(a) > 0; });
  if (sub == args.end()) throw UsageError("--config needs a subcommand");
  args.insert(std::next(sub), expanded.begin(), expanded.end());
  return args;
}

void add_completion_flags(CLI::App* app, completion::CompletionParams& p) {
  app->add_option("--data-weight", p.data_weight, "Scribble data weight");
  app->add_option("--sharpness", p.normal_sharpness, "Normal similarity sharpness of edge weights");
  app->add_option("--connectivity", p.connectivity, "Solver grid connectivity")->check(CLI::IsMember({4, 8}));
  app->add_option("--solve-h", p.solve_h, "Working height of the solve (0: image height / 4)");
  app->add_option("--tol", p.tol, "Relative residual tolerance");
  app->add_option("--max-iter", p.max_iter, "Iteration cap per channel");
}

scribble::ScribbleMap load_scribble(const fs::path& path, int width, int height) {
  if (fs::is_directory(path)) return scribble::read_scribble_dir(path);
  return decode_scribble_runs(read_json(path), width, height);
}

Mask subject_or_valid(const std::string& mask_path, const NormalMap& n) {
  if (mask_path.empty()) return n.valid;
  return read_mask(mask_path);
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scribble-driven portrait relighting", "relight"};
  app.set_version_flag("--version", RELIGHT_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  int threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (0: all cores)")
      ->envname("RELIGHT_THREADS")
      ->check(CLI::NonNegativeNumber);

  std::map<std::string, Command> commands;
  auto add = [&](const std::string& name, const std::string& help) -> Command& {
    Command& c = commands[name];
    c.app = app.add_subcommand(name, help);
    return c;
  };

  // prefilter
  struct {
    std::string env, out;
    double exponent = env::kDefaultPhongExponent;
    int out_h = env::kDefaultIrradianceHeight;
    int work_h = 0;
  } pf;
  {
    Command& c = add("prefilter", "Prefilter an environment map into diffuse and specular irradiance");
    c.input("--env", pf.env, "Environment map (.hdr or .pfm)")->required();
    c.app->add_option("--out", pf.out, "Output directory")->required();
    c.app->add_option("--exponent", pf.exponent, "Phong exponent")->check(CLI::Range(1.0, 1e6));
    c.app->add_option("--out-h", pf.out_h, "Irradiance map height")->check(CLI::PositiveNumber);
    c.app->add_option("--work-h", pf.work_h, "Box-downsample the environment to this height first (0: off)")
        ->check(CLI::NonNegativeNumber);
    c.run = [&c, &pf] {
      env::EnvMap e = env::read_env(pf.env);
      if (pf.work_h > 0 && pf.work_h < e.height())
        e = env::EnvMap(resample(e.radiance(), 2 * pf.work_h, pf.work_h, ResampleFilter::Box));
      const auto irr = env::prefilter_pair(e, pf.exponent, pf.out_h);
      const fs::path dir = pf.out;
      fs::create_directories(dir);
      write_pfm(dir / "diffuse.pfm", irr.diffuse.radiance());
      write_pfm(dir / "specular.pfm", irr.specular.radiance());
      c.extra["exponent"] = pf.exponent;
      return json{{"outputs", {(dir / "diffuse.pfm").string(), (dir / "specular.pfm").string()}},
                  {"height", irr.diffuse.height()}};
    };
  }

  // shade
  struct {
    std::string normals, irr, env, out;
    double exponent = env::kDefaultPhongExponent;
    int irr_h = env::kDefaultIrradianceHeight;
  } sh;
  {
    Command& c = add("shade", "Render a Phong shading map from normals and irradiance");
    c.input("--normals", sh.normals, "Normal map (.pfm, or 16-bit .png)")->required();
    auto* irr = c.input("--irr", sh.irr, "Directory written by `prefilter`", true);
    auto* en = c.input("--env", sh.env, "Environment map, prefiltered on the fly");
    irr->excludes(en);
    c.app->add_option("--out", sh.out, "Output shading (.pfm or .png)")->required();
    c.app->add_option("--exponent", sh.exponent, "Phong exponent when --env is used")->check(CLI::Range(1.0, 1e6));
    c.app->add_option("--irr-h", sh.irr_h, "Irradiance height when --env is used (capped at the env height)")->check(CLI::PositiveNumber);
    c.run = [&sh] {
      env::IrradiancePair pair;
      if (!sh.irr.empty()) {
        const fs::path dir = sh.irr;
        pair.diffuse = env::EnvMap::from_radiance(read_pfm(dir / "diffuse.pfm"));
        pair.specular = env::EnvMap::from_radiance(read_pfm(dir / "specular.pfm"));
        pair.exponent = sh.exponent;
        if (fs::exists(dir / "manifest.json")) {
          const json m = read_json(dir / "manifest.json");
          if (m.contains("exponent")) pair.exponent = m["exponent"].get<double>();
        }
      } else if (!sh.env.empty()) {
        const env::EnvMap e = env::read_env(sh.env);
        pair = env::prefilter_pair(e, sh.exponent, std::min(sh.irr_h, e.height()));
      } else {
        throw UsageError("shade needs --irr or --env");
      }
      const NormalMap n = read_normals(sh.normals);
      write_color(sh.out, phong_shade(n, pair));
      return json{{"outputs", {sh.out}}, {"exponent", pair.exponent}};
    };
  }

  // synth-env
  struct {
    std::string out, spec;
    int height = 64;
    std::uint64_t seed = 0;
    env::EllipseRanges ranges;
  } se;
  {
    Command& c = add("synth-env", "Synthesize an environment of colored ellipses on black");
    c.app->add_option("--out", se.out, "Output environment (.hdr or .pfm)")->required();
    c.input("--spec", se.spec, "JSON list of ellipses; replaces random sampling");
    c.app->add_option("--height", se.height, "Panorama height (width is twice)")->check(CLI::PositiveNumber);
    c.app->add_option("--seed", se.seed, "Random seed");
    c.app->add_option("--count-min", se.ranges.count_min, "Fewest ellipses");
    c.app->add_option("--count-max", se.ranges.count_max, "Most ellipses");
    c.app->add_option("--radius-min", se.ranges.radius_min, "Smallest angular radius (rad)");
    c.app->add_option("--radius-max", se.ranges.radius_max, "Largest angular radius (rad)");
    c.app->add_option("--intensity-min", se.ranges.intensity_min, "Dimmest peak radiance");
    c.app->add_option("--intensity-max", se.ranges.intensity_max, "Brightest peak radiance");
    c.app->add_option("--feather-min", se.ranges.feather_min, "Smallest edge feather (fraction of radius)");
    c.app->add_option("--feather-max", se.ranges.feather_max, "Largest edge feather (fraction of radius)");
    c.run = [&c, &se] {
      std::vector<env::Ellipse> ellipses;
      if (!se.spec.empty()) {
        const json j = read_json(se.spec);
        const json& list = j.is_object() && j.contains("ellipses") ? j["ellipses"] : j;
        if (!list.is_array()) throw ContractError(se.spec + ": expected a list of ellipses");
        for (const auto& e : list) {
          env::Ellipse el;
          el.phi = e.at("phi").get<double>();
          el.theta = e.at("theta").get<double>();
          el.radius_phi = e.at("radius_phi").get<double>();
          el.radius_theta = e.at("radius_theta").get<double>();
          const auto col = e.at("color").get<std::array<float, 3>>();
          el.color = {col[0], col[1], col[2]};
          el.feather = e.value("feather", 0.0);
          ellipses.push_back(el);
        }
      } else {
        Rng rng(se.seed);
        ellipses = env::random_ellipses(se.ranges, rng);
      }
      write_env(se.out, env::synth_ellipse_env(se.height, ellipses));
      json list = json::array();
      for (const auto& e : ellipses)
        list.push_back({{"phi", e.phi},
                        {"theta", e.theta},
                        {"radius_phi", e.radius_phi},
                        {"radius_theta", e.radius_theta},
                        {"color", rgb_json(e.color)},
                        {"feather", e.feather}});
      c.extra["ellipses"] = list;
      return json{{"outputs", {se.out}}, {"ellipses", ellipses.size()}};
    };
  }

  // rotate-env
  struct {
    std::string env, out;
    double degrees = 0;
  } re;
  {
    Command& c = add("rotate-env", "Rotate an environment map about the vertical axis");
    c.input("--env", re.env, "Environment map (.hdr or .pfm)")->required();
    c.app->add_option("--out", re.out, "Output environment (.hdr or .pfm)")->required();
    c.app->add_option("--degrees", re.degrees, "Yaw angle in degrees");
    c.run = [&re] {
      write_env(re.out, env::rotate_yaw(env::read_env(re.env), re.degrees * std::numbers::pi / 180.0));
      return json{{"outputs", {re.out}}};
    };
  }

  // synth-olat
  struct {
    std::string out, geometry = "sphere", albedo = "noise";
    int size = 256, lights = olat::kDefaultLightCount;
    double exponent = env::kDefaultPhongExponent;
    std::uint64_t seed = 0, rig_seed = 0;
  } so;
  {
    Command& c = add("synth-olat", "Render a synthetic one-light-at-a-time stack");
    c.app->add_option("--out", so.out, "Output stack directory")->required();
    c.app->add_option("--geometry", so.geometry, "sphere or heightfield")->check(CLI::IsMember({"sphere", "heightfield"}));
    c.app->add_option("--albedo", so.albedo, "white, constant, checker or noise")
        ->check(CLI::IsMember({"white", "constant", "checker", "noise"}));
    c.app->add_option("--size", so.size, "Image width and height")->check(CLI::Range(8, 2048));
    c.app->add_option("--lights", so.lights, "Number of lights on the rig")->check(CLI::Range(1, 4096));
    c.app->add_option("--exponent", so.exponent, "Phong exponent")->check(CLI::Range(1.0, 1e6));
    c.app->add_option("--seed", so.seed, "Scene seed (noise albedo, heightfield bumps)");
    c.app->add_option("--rig-seed", so.rig_seed, "Rig seed (azimuthal jitter of the lights)");
    c.run = [&so] {
      olat::SceneSpec spec;
      spec.geometry = olat::parse_geometry(so.geometry);
      spec.albedo = olat::parse_albedo(so.albedo);
      spec.width = spec.height = so.size;
      spec.exponent = so.exponent;
      spec.seed = so.seed;
      const auto stack = olat::synth_olat(spec, olat::make_light_rig(so.lights, so.rig_seed));
      write_stack(so.out, stack);
      return json{{"outputs", {so.out}}, {"lights", stack.rig.size()}, {"z", stack.z}};
    };
  }

  // ibr
  struct {
    std::string stack, env, out, reference;
    double degrees = 0;
    int irr_h = env::kDefaultIrradianceHeight;
  } ib;
  {
    Command& c = add("ibr", "Relight an OLAT stack under an environment map");
    c.input("--stack", ib.stack, "Directory written by `synth-olat`", true)->required();
    c.input("--env", ib.env, "Environment map (.hdr or .pfm)")->required();
    c.app->add_option("--out", ib.out, "Output image (.pfm or .png)")->required();
    c.app->add_option("--degrees", ib.degrees, "Rotate the environment first (yaw, degrees)");
    c.app->add_option("--reference", ib.reference,
                      "Also write albedo x Phong shading of the stack geometry and report PSNR against it");
    c.app->add_option("--irr-h", ib.irr_h, "Irradiance height for --reference (capped at the env height)")->check(CLI::PositiveNumber);
    c.run = [&ib] {
      const auto stack = read_stack(ib.stack);
      env::EnvMap e = env::read_env(ib.env);
      if (ib.degrees != 0) e = env::rotate_yaw(e, ib.degrees * std::numbers::pi / 180.0);
      const ImageF img = olat::ibr_render(stack, e);
      write_color(ib.out, img);
      json summary = {{"outputs", {ib.out}}};
      if (!ib.reference.empty()) {
        const auto irr = env::prefilter_pair(e, stack.scene.exponent, std::min(ib.irr_h, e.height()));
        const ImageF ref = compose_relit(stack.albedo_gt, phong_shade(stack.normals_gt, irr));
        write_color(ib.reference, ref);
        summary["outputs"].push_back(ib.reference);
        summary["psnr"] = psnr_masked(img, ref, stack.subject);
      }
      return summary;
    };
  }

  // simulate
  struct {
    std::string shading, mask, out;
    scribble::SimParams p;
    double shift = std::numeric_limits<double>::quiet_NaN();
    double rate = std::numeric_limits<double>::quiet_NaN();
    bool no_noise = false;
  } sm;
  {
    Command& c = add("simulate", "Simulate user scribbles from a shading map");
    c.input("--shading", sm.shading, "Shading map (.pfm linear, or .png sRGB)")->required();
    c.input("--mask", sm.mask, "Subject mask")->required();
    c.app->add_option("--out", sm.out, "Output scribble directory")->required();
    c.app->add_option("--seed", sm.p.seed, "Random seed");
    c.app->add_option("--bins", sm.p.n_bins, "Luminance quantization bins");
    c.app->add_option("--shift", sm.shift, "Bin shift (default: random)");
    c.app->add_option("--superpixels", sm.p.superpixels, "Target superpixel count");
    c.app->add_option("--lambda", sm.p.lambda, "Rate of the truncated exponential sampling-rate draw");
    c.app->add_option("--keep", sm.p.keep_fraction, "Fraction of darkest and brightest segments always kept");
    c.app->add_option("--rate", sm.rate, "Fixed sampling rate (default: random)");
    c.app->add_option("--noise-sigma", sm.p.noise_sigma, "Std-dev of the Lab noise fill");
    c.app->add_option("--seeds-levels", sm.p.seeds_levels, "Superpixel block levels");
    c.app->add_option("--seeds-iterations", sm.p.seeds_iterations, "Superpixel sweeps");
    c.flag("--no-noise", sm.no_noise, "Leave unscribbled pixels empty instead of noise filling");
    c.run = [&c, &sm] {
      scribble::SimParams p = sm.p;
      if (!std::isnan(sm.shift)) p.bin_shift = sm.shift;
      if (!std::isnan(sm.rate)) p.fixed_rate = sm.rate;
      p.noise = !sm.no_noise;
      scribble::validate(p);
      const ImageF shading = load_color(sm.shading);
      const Mask subject = read_mask(sm.mask);
      const auto scr = scribble::simulate(shading, subject, p);
      const fs::path dir = sm.out;
      fs::create_directories(dir);
      scribble::write_scribble_dir(dir, scr);
      write_json_atomic(dir / "scribble_runs.json", encode_scribble_runs(scr));
      c.extra["params"] = to_json(p);
      c.extra["rate"] = scr.rate;
      return json{{"outputs", {dir.string()}}, {"rate", scr.rate}, {"valid_pixels", scr.valid_count()}};
    };
  }

  // complete
  struct {
    std::string scribble, normals, mask, out;
    completion::CompletionParams p;
  } cp;
  {
    Command& c = add("complete", "Complete a full shading map from scribbles and normals");
    c.input("--scribble", cp.scribble, "Scribble directory or run-length JSON")->required();
    c.input("--normals", cp.normals, "Normal map")->required();
    c.input("--mask", cp.mask, "Subject mask (default: where normals are valid)");
    c.app->add_option("--out", cp.out, "Output shading (.pfm or .png)")->required();
    add_completion_flags(c.app, cp.p);
    c.run = [&c, &cp] {
      completion::validate(cp.p);
      const NormalMap n = read_normals(cp.normals);
      const Mask subject = subject_or_valid(cp.mask, n);
      const auto scr = load_scribble(cp.scribble, n.normals.width(), n.normals.height());
      completion::CompletionReport report;
      const ImageF s = completion::complete_shading(scr, n, subject, cp.p, &report);
      write_color(cp.out, s);
      c.extra["params"] = to_json(cp.p);
      c.extra["report"] = to_json(report);
      return json{{"outputs", {cp.out}}, {"report", to_json(report)}};
    };
  }

  // relight
  struct {
    std::string albedo, shading, mask, image, out;
  } rl;
  {
    Command& c = add("relight", "Compose albedo and shading into a relit image");
    c.input("--albedo", rl.albedo, "Albedo (.pfm linear, or .png sRGB)")->required();
    c.input("--shading", rl.shading, "Shading (.pfm linear, or .png sRGB)")->required();
    c.input("--mask", rl.mask, "Subject mask; outside it --image (or black) is kept");
    c.input("--image", rl.image, "Original image used outside the mask");
    c.app->add_option("--out", rl.out, "Output image (.pfm or .png)")->required();
    c.run = [&rl] {
      ImageF relit = compose_relit(load_color(rl.albedo), load_color(rl.shading));
      if (!rl.mask.empty()) {
        const Mask m = read_mask(rl.mask);
        if (!m.matches(relit)) throw ContractError("--mask size differs from --albedo");
        ImageF bg = rl.image.empty() ? ImageF(relit.width(), relit.height(), 3, ColorSpace::LinearRgb)
                                     : load_color(rl.image);
        if (!bg.same_shape(relit)) throw ContractError("--image size differs from --albedo");
        for (int y = 0; y < relit.height(); ++y)
          for (int x = 0; x < relit.width(); ++x)
            for (int ch = 0; ch < 3; ++ch) {
              const float a = m.at(x, y);
              relit.at(x, y, ch) = a * relit.at(x, y, ch) + (1 - a) * bg.at(x, y, ch);
            }
      }
      write_color(rl.out, relit);
      return json{{"outputs", {rl.out}}};
    };
  }

  // pipeline
  struct {
    std::string image, normals, albedo, mask, skin, tone, scribble, out, gt, shading_out;
    completion::CompletionParams p;
  } pl;
  {
    Command& c = add("pipeline", "Tone shift, shading completion and composition for one portrait");
    c.input("--image", pl.image, "Portrait (.png sRGB or .pfm linear)")->required();
    c.input("--normal,--normals", pl.normals, "Normal map")->required();
    c.input("--albedo", pl.albedo, "Albedo (default: the image itself)");
    c.input("--mask", pl.mask, "Subject mask (default: where normals are valid)");
    c.input("--skin", pl.skin, "Skin mask, needed for --tone");
    c.app->add_option("--skin-tone,--tone", pl.tone, "Target skin tone as sRGB hex, e.g. #c68e6e");
    c.input("--scribble", pl.scribble, "Scribble directory or run-length JSON")->required();
    c.app->add_option("--out", pl.out, "Output image (.png or .pfm)")->required();
    c.input("--gt", pl.gt, "Ground truth; PSNR and SSIM over the subject are reported");
    c.app->add_option("--shading-out", pl.shading_out, "Also write the completed shading");
    add_completion_flags(c.app, pl.p);
    c.run = [&c, &pl] {
      completion::validate(pl.p);
      Portrait portrait;
      portrait.image = load_color(pl.image);
      portrait.normals = read_normals(pl.normals);
      portrait.subject = subject_or_valid(pl.mask, portrait.normals);
      if (!pl.skin.empty()) portrait.skin = read_mask(pl.skin);
      if (!pl.albedo.empty()) portrait.albedo = load_color(pl.albedo);
      std::optional<Rgb> tone;
      if (!pl.tone.empty()) {
        if (pl.skin.empty()) throw UsageError("--skin-tone requires --skin");
        tone = skin::tone_from_hex(pl.tone);
      }
      const auto scr = load_scribble(pl.scribble, portrait.width(), portrait.height());
      const auto r = relight_portrait(portrait, scr, tone, pl.p);
      write_color(pl.out, r.relit);
      json summary = {{"outputs", {pl.out}}, {"report", to_json(r.completion)}};
      if (!pl.shading_out.empty()) {
        write_color(pl.shading_out, r.shading);
        summary["outputs"].push_back(pl.shading_out);
      }
      if (r.tone) summary["tone"] = {{"old_mean", rgb_json(r.tone->old_mean)}, {"new_mean", rgb_json(r.tone->new_mean)}};
      if (!pl.gt.empty()) {
        const ImageF gt = load_color(pl.gt);
        summary["psnr"] = psnr_masked(r.relit, gt, portrait.subject);
        summary["ssim"] = ssim_masked(r.relit, gt, portrait.subject);
      }
      c.extra["params"] = to_json(pl.p);
      c.extra["report"] = summary["report"];
      return summary;
    };
  }

  // tone-shift
  struct {
    std::string albedo, skin, tone, out;
  } ts;
  {
    Command& c = add("tone-shift", "Shift the mean skin color of an albedo to a target tone");
    c.input("--albedo", ts.albedo, "Albedo (.pfm linear, or .png sRGB)")->required();
    c.input("--skin", ts.skin, "Skin mask")->required();
    c.app->add_option("--skin-tone,--tone", ts.tone, "Target tone as sRGB hex (omit for the unconditional no-op)");
    c.app->add_option("--out", ts.out, "Output albedo (.pfm or .png)")->required();
    c.run = [&ts] {
      const ImageF albedo = load_color(ts.albedo);
      const Mask skin = read_mask(ts.skin);
      std::optional<Rgb> tone;
      if (!ts.tone.empty()) tone = skin::tone_from_hex(ts.tone);
      skin::ToneShiftReport report;
      const ImageF shifted = skin::apply_skin_tone(albedo, skin, tone, &report);
      write_color(ts.out, shifted);
      json summary = {{"outputs", {ts.out}}, {"shifted", tone.has_value()}};
      if (tone) {
        summary["old_mean"] = rgb_json(report.old_mean);
        summary["new_mean"] = rgb_json(report.new_mean);
        summary["clamped"] = report.clamped;
      }
      return summary;
    };
  }

  // eval
  struct {
    std::string a, b, mask;
  } ev;
  {
    Command& c = add("eval", "Masked PSNR and SSIM between two images");
    c.input("--a", ev.a, "First image")->required();
    c.input("--b", ev.b, "Second image")->required();
    c.input("--mask", ev.mask, "Mask (default: all pixels)");
    c.run = [&ev] {
      const ImageF a = load_color(ev.a);
      const ImageF b = load_color(ev.b);
      if (!a.same_shape(b)) throw ContractError("--a and --b differ in size");
      const Mask m = ev.mask.empty() ? Mask(a.width(), a.height(), 1.0f) : read_mask(ev.mask);
      return json{{"psnr", psnr_masked(a, b, m)}, {"ssim", ssim_masked(a, b, m)}};
    };
  }

  // serve
  ServiceConfig sv;
  std::string static_dir;
  int ttl_s = static_cast<int>(sv.ttl.count());
  {
    Command& c = add("serve", "Run the HTTP service");
    c.app->add_option("--host", sv.host, "Bind address");
    c.app->add_option("--port", sv.port, "Port")->check(CLI::Range(0, 65535));
    c.app->add_option("--static", static_dir, "Directory served at / (built web UI)");
    c.app->add_option("--ttl", ttl_s, "Session idle lifetime in seconds")->check(CLI::PositiveNumber);
    c.app->add_option("--max-solves", sv.max_concurrent_solves, "Concurrent solves (0: hardware threads)");
    c.app->add_option("--max-dimension", sv.max_dimension, "Largest accepted image side");
    c.app->add_option("--cors-origin", sv.cors_origin, "Access-Control-Allow-Origin value");
    add_completion_flags(c.app, sv.defaults);
    c.run = [&] {
      sv.static_dir = static_dir;
      sv.ttl = std::chrono::seconds(ttl_s);
      const int rc = run_service(sv);
      if (rc != 0) throw std::runtime_error("service stopped with an error");
      return json::object();
    };
  }

  std::set<std::string> names;
  for (const auto& [name, c] : commands) names.insert(name);

  std::string active;
  try {
    std::vector<std::string> args = expand_config(raw_args, names);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "relight: " << e.what() << "\n";
    out << json{{"status", "error"}, {"exit", kExitUsage}, {"error", e.what()}}.dump() << std::endl;
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "relight: " << e.what() << "\n";
    out << json{{"status", "error"}, {"exit", kExitUsage}, {"error", e.what()}}.dump() << std::endl;
    return kExitUsage;
  }

  set_default_thread_count(threads);
  for (auto& [name, c] : commands) {
    if (!c.app->parsed()) continue;
    active = name;
    try {
      json summary = c.run();
      if (name != "eval" && name != "serve") {
        const CLI::Option* o = c.app->get_option_no_throw("--out");
        const fs::path outp = o->results().back();
        const bool is_dir = fs::is_directory(outp);
        json m = c.manifest();
        m["outputs"] = summary.value("outputs", json::array());
        write_json_atomic(manifest_path(outp, is_dir), m);
        summary["manifest"] = manifest_path(outp, is_dir).string();
      }
      json line = {{"command", name}, {"status", "ok"}};
      for (const auto& [k, v] : summary.items()) line[k] = v;
      out << line.dump() << std::endl;
      return kExitOk;
    } catch (const UsageError& e) {
      err << "relight " << name << ": " << e.what() << "\n";
      out << json{{"command", name}, {"status", "error"}, {"exit", kExitUsage}, {"error", e.what()}}.dump()
          << std::endl;
      return kExitUsage;
    } catch (const std::exception& e) {
      err << "relight " << name << ": " << e.what() << "\n";
      out << json{{"command", name}, {"status", "error"}, {"exit", kExitProcessing}, {"error", e.what()}}.dump()
          << std::endl;
      return kExitProcessing;
    }
  }
  return kExitUsage;
}

}  // namespace relight::app

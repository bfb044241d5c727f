#include "relight_app/service.hpp"

#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <semaphore>
#include <thread>

#include "httplib.h"
#include "relight/error.hpp"
#include "relight/pipeline.hpp"
#include "relight_app/io.hpp"

namespace relight::app {
namespace {

using Clock = std::chrono::steady_clock;

struct HttpError {
  int status;
  json body;
};

HttpError http_error(int status, const std::string& message, const std::string& field = {}) {
  json body = {{"schema_version", kSchemaVersion}, {"error", message}};
  if (!field.empty()) body["field"] = field;
  return {status, std::move(body)};
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

std::string new_session_id() {
  static std::mutex m;
  static std::random_device rd;
  std::lock_guard lock(m);
  std::string id;
  for (int i = 0; i < 4; ++i) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(rd()));
    id += buf;
  }
  return id;
}

struct Session {
  std::string id;
  Portrait portrait;
  std::shared_ptr<const completion::PreparedGraph> graph;  // for the service defaults

  mutable std::mutex mutex;
  mutable Clock::time_point last_used;
  mutable std::shared_ptr<const ImageF> last_shading;
  mutable std::map<std::string, std::shared_ptr<const completion::PreparedGraph>> graphs;
};

std::string graph_key(const completion::CompletionParams& p, int full_h) {
  return std::to_string(p.normal_sharpness) + "/" + std::to_string(p.connectivity) + "/" +
         std::to_string(completion::solve_height(p, full_h));
}

}  // namespace

struct Service::Impl {
  ServiceConfig config;
  mutable std::mutex mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::counting_semaphore<1024> solves;

  explicit Impl(ServiceConfig c)
      : config(std::move(c)),
        solves(std::clamp(config.max_concurrent_solves > 0 ? config.max_concurrent_solves
                                                           : static_cast<int>(std::max(1u, std::thread::hardware_concurrency())),
                          1, 1024)) {}

  void expire() {
    const auto now = Clock::now();
    std::lock_guard lock(mutex);
    for (auto it = sessions.begin(); it != sessions.end();) {
      bool dead;
      {
        std::lock_guard s(it->second->mutex);
        dead = now - it->second->last_used > config.ttl;
      }
      it = dead ? sessions.erase(it) : std::next(it);
    }
  }

  std::shared_ptr<Session> find(const std::string& id) {
    expire();
    std::shared_ptr<Session> s;
    {
      std::lock_guard lock(mutex);
      auto it = sessions.find(id);
      if (it == sessions.end()) throw http_error(404, "unknown or expired session '" + id + "'");
      s = it->second;
    }
    std::lock_guard lock(s->mutex);
    s->last_used = Clock::now();
    return s;
  }

  std::shared_ptr<const completion::PreparedGraph> graph_for(const Session& s, const completion::CompletionParams& p) {
    if (s.graph->compatible(p)) return s.graph;
    const std::string key = graph_key(p, s.portrait.height());
    {
      std::lock_guard lock(s.mutex);
      auto it = s.graphs.find(key);
      if (it != s.graphs.end()) return it->second;
    }
    auto g = std::make_shared<const completion::PreparedGraph>(
        completion::prepare_graph(s.portrait.normals, s.portrait.subject, p));
    std::lock_guard lock(s.mutex);
    if (s.graphs.size() >= 4) s.graphs.erase(s.graphs.begin());
    s.graphs.emplace(key, g);
    return g;
  }

  template <typename Decode>
  auto decode_part(const httplib::Request& req, const std::string& name, bool required, Decode decode)
      -> std::optional<decltype(decode(std::span<const std::uint8_t>()))> {
    if (!req.has_file(name)) {
      if (required) throw http_error(400, "missing multipart field '" + name + "'", name);
      return std::nullopt;
    }
    const std::string& content = req.get_file_value(name).content;
    try {
      return decode(std::span(reinterpret_cast<const std::uint8_t*>(content.data()), content.size()));
    } catch (const DecodeError& e) {
      throw http_error(400, std::string("cannot decode '") + name + "': " + e.what(), name);
    } catch (const ContractError& e) {
      throw http_error(400, std::string("cannot decode '") + name + "': " + e.what(), name);
    }
  }

  void check_size(int w, int h, const std::string& field) const {
    if (w > config.max_dimension || h > config.max_dimension) {
      throw http_error(413,
                       field + " is " + std::to_string(w) + "x" + std::to_string(h) + "; the limit is " +
                           std::to_string(config.max_dimension) + " per side",
                       field);
    }
  }

  void create(const httplib::Request& req, httplib::Response& res) {
    if (!req.is_multipart_form_data()) throw http_error(400, "expected multipart/form-data");
    static const std::set<std::string> known = {"image", "normals", "subject", "albedo", "skin"};
    for (const auto& [name, file] : req.files)
      if (!known.count(name)) throw http_error(400, "unknown multipart field '" + name + "'", name);

    Portrait p;
    p.image = *decode_part(req, "image", true, decode_color);
    check_size(p.image.width(), p.image.height(), "image");
    p.normals = *decode_part(req, "normals", true, decode_normals);
    check_size(p.normals.width(), p.normals.height(), "normals");
    p.subject = *decode_part(req, "subject", true, decode_mask);
    if (auto skin = decode_part(req, "skin", false, decode_mask)) p.skin = std::move(*skin);
    if (auto albedo = decode_part(req, "albedo", false, decode_color)) p.albedo = std::move(*albedo);

    auto mismatch = [&](int w, int h, const std::string& field) {
      if (w != p.image.width() || h != p.image.height()) {
        throw http_error(422,
                         field + " is " + std::to_string(w) + "x" + std::to_string(h) + " but image is " +
                             std::to_string(p.image.width()) + "x" + std::to_string(p.image.height()),
                         field);
      }
    };
    mismatch(p.normals.width(), p.normals.height(), "normals");
    mismatch(p.subject.width(), p.subject.height(), "subject");
    if (!p.skin.empty()) mismatch(p.skin.width(), p.skin.height(), "skin");
    if (!p.albedo.empty()) mismatch(p.albedo.width(), p.albedo.height(), "albedo");
    if (!p.subject.any()) throw http_error(422, "subject mask is empty", "subject");
    try {
      validate_normals(p.normals);
    } catch (const ContractError& e) {
      throw http_error(422, e.what(), "normals");
    }

    auto s = std::make_shared<Session>();
    s->id = new_session_id();
    s->graph = std::make_shared<const completion::PreparedGraph>(
        completion::prepare_graph(p.normals, p.subject, config.defaults));
    s->portrait = std::move(p);
    s->last_used = Clock::now();
    const json body = {{"schema_version", kSchemaVersion},
                       {"session_id", s->id},
                       {"width", s->portrait.width()},
                       {"height", s->portrait.height()},
                       {"solve_width", s->graph->w},
                       {"solve_height", s->graph->h},
                       {"has_albedo", !s->portrait.albedo.empty()},
                       {"has_skin", !s->portrait.skin.empty()},
                       {"ttl_s", config.ttl.count()}};
    {
      std::lock_guard lock(mutex);
      sessions.emplace(s->id, s);
    }
    send_json(res, 201, body);
  }

  void relight(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    auto s = find(id);
    json payload;
    try {
      payload = json::parse(req.body);
    } catch (const json::parse_error& e) {
      throw http_error(400, std::string("invalid JSON: ") + e.what());
    }
    if (!payload.is_object()) throw http_error(400, "payload must be a JSON object");
    for (const auto& [key, v] : payload.items())
      if (key != "schema_version" && key != "scribble" && key != "skin_tone" && key != "params")
        throw http_error(400, "unknown field '" + key + "'", key);
    if (!payload.contains("schema_version") || payload["schema_version"] != kSchemaVersion)
      throw http_error(400, "schema_version must be " + std::to_string(kSchemaVersion), "schema_version");
    if (!payload.contains("scribble")) throw http_error(400, "missing field 'scribble'", "scribble");

    completion::CompletionParams params = config.defaults;
    if (payload.contains("params")) {
      try {
        params = completion_params_from_json(payload["params"], params);
      } catch (const ContractError& e) {
        throw http_error(400, e.what(), "params");
      }
    }
    std::optional<Rgb> tone;
    if (payload.contains("skin_tone") && !payload["skin_tone"].is_null()) {
      if (!payload["skin_tone"].is_string()) throw http_error(400, "skin_tone must be a hex string", "skin_tone");
      try {
        tone = skin::tone_from_hex(payload["skin_tone"].get<std::string>());
      } catch (const ContractError& e) {
        throw http_error(400, e.what(), "skin_tone");
      }
      if (s->portrait.skin.empty()) throw http_error(422, "skin_tone given but the session has no skin mask", "skin_tone");
    }

    scribble::ScribbleMap scr;
    try {
      scr = decode_scribble_runs(payload["scribble"], s->portrait.width(), s->portrait.height());
    } catch (const ContractError& e) {
      throw http_error(std::string(e.what()).find("differs from session") != std::string::npos ? 422 : 400, e.what(),
                       "scribble");
    }

    const auto start = Clock::now();
    RelightResult r;
    {
      const auto graph = graph_for(*s, params);
      solves.acquire();
      struct Release {
        std::counting_semaphore<1024>& sem;
        ~Release() { sem.release(); }
      } release{solves};
      try {
        r = relight_portrait(s->portrait, *graph, scr, tone, params);
      } catch (const completion::EmptyScribbleError& e) {
        throw http_error(409, e.what(), "scribble");
      } catch (const SolverError& e) {
        HttpError err = http_error(500, e.what());
        err.body["residual"] = e.residual();
        err.body["iterations"] = e.iterations();
        throw err;
      }
    }
    Bytes png = encode_srgb_png(r.relit, config.png_compression);
    const double elapsed = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    {
      std::lock_guard lock(s->mutex);
      s->last_shading = std::make_shared<const ImageF>(std::move(r.shading));
    }

    json diag = to_json(r.completion);
    diag["schema_version"] = kSchemaVersion;
    diag["elapsed_ms"] = elapsed;
    diag["solve_ms"] = r.completion.elapsed_ms;
    diag["tone_applied"] = r.tone.has_value();
    if (r.tone) diag["tone_clamped"] = r.tone->clamped;
    const std::string etag = "\"" + fnv1a_hex(png) + "\"";
    res.set_header("X-Relight-Diagnostics", diag.dump());
    res.set_header("ETag", etag);
    if (req.get_header_value("If-None-Match") == etag) {
      res.status = 304;
      return;
    }
    res.status = 200;
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  }

  void shading(const std::string& id, httplib::Response& res) {
    auto s = find(id);
    std::shared_ptr<const ImageF> shading;
    {
      std::lock_guard lock(s->mutex);
      shading = s->last_shading;
    }
    if (!shading) throw http_error(404, "no shading has been completed for this session yet");
    const Bytes png = encode_srgb_png(*shading, config.png_compression);
    res.status = 200;
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  }

  void remove(const std::string& id, httplib::Response& res) {
    std::lock_guard lock(mutex);
    if (sessions.erase(id) == 0) throw http_error(404, "unknown or expired session '" + id + "'");
    res.status = 204;
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
  completion::validate(impl_->config.defaults);
}

Service::~Service() = default;

std::size_t Service::session_count() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->sessions.size();
}

const ServiceConfig& Service::config() const noexcept { return impl_->config; }

void Service::mount(httplib::Server& svr) {
  Impl& im = *impl_;
  svr.set_payload_max_length(im.config.max_payload_bytes);
  svr.set_default_headers({{"Access-Control-Allow-Origin", im.config.cors_origin},
                           {"Access-Control-Expose-Headers", "X-Relight-Diagnostics, ETag"}});

  auto guarded = [](auto fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const HttpError& e) {
        send_json(res, e.status, e.body);
      } catch (const ContractError& e) {
        send_json(res, 422, http_error(422, e.what()).body);
      } catch (const std::exception& e) {
        send_json(res, 500, http_error(500, e.what()).body);
      }
    };
  };

  svr.Options(R"(/.*)", [&im](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, If-None-Match");
    res.set_header("Access-Control-Max-Age", "600");
    res.status = 204;
    (void)im;
  });
  svr.Get("/healthz", guarded([&im](const httplib::Request&, httplib::Response& res) {
            im.expire();
            std::size_t n;
            {
              std::lock_guard lock(im.mutex);
              n = im.sessions.size();
            }
            send_json(res, 200, {{"schema_version", kSchemaVersion}, {"status", "ok"}, {"sessions", n}});
          }));
  svr.Post("/v1/sessions", guarded([&im](const httplib::Request& req, httplib::Response& res) { im.create(req, res); }));
  svr.Post(R"(/v1/sessions/([A-Za-z0-9]+)/relight)",
           guarded([&im](const httplib::Request& req, httplib::Response& res) { im.relight(req.matches[1], req, res); }));
  svr.Get(R"(/v1/sessions/([A-Za-z0-9]+)/shading)",
          guarded([&im](const httplib::Request& req, httplib::Response& res) { im.shading(req.matches[1], res); }));
  svr.Delete(R"(/v1/sessions/([A-Za-z0-9]+))",
             guarded([&im](const httplib::Request& req, httplib::Response& res) { im.remove(req.matches[1], res); }));
  if (!im.config.static_dir.empty()) {
    if (!svr.set_mount_point("/", im.config.static_dir.string()))
      std::cerr << "relight serve: static directory " << im.config.static_dir << " not found\n";
  }
}

int run_service(const ServiceConfig& config) {
  httplib::Server svr;
  Service service(config);
  service.mount(svr);
  if (!svr.bind_to_port(config.host, config.port)) {
    std::cerr << "relight serve: cannot bind " << config.host << ":" << config.port << "\n";
    return 2;
  }
  std::cout << json{{"event", "listening"}, {"host", config.host}, {"port", config.port}}.dump() << std::endl;
  return svr.listen_after_bind() ? 0 : 2;
}

}  // namespace relight::app

#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>

#include "relight/completion.hpp"
#include "relight_app/io.hpp"

namespace httplib {
class Server;
}

namespace relight::app {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::chrono::seconds ttl{30 * 60};
  // Concurrent solves; 0 means hardware concurrency.
  int max_concurrent_solves = 0;
  int max_dimension = 2048;
  std::size_t max_payload_bytes = std::size_t{256} << 20;
  std::string cors_origin = "*";
  // Served at "/" when set (the built web UI).
  std::filesystem::path static_dir;
  int png_compression = kPngCompression;
  completion::CompletionParams defaults;
};

// Session store and request handlers for the HTTP API:
//   POST   /v1/sessions                 multipart: image, normals, subject, [albedo], [skin]
//   POST   /v1/sessions/{id}/relight    JSON: schema_version, scribble, [skin_tone], [params]
//   GET    /v1/sessions/{id}/shading    PNG of the last completed shading
//   DELETE /v1/sessions/{id}
//   GET    /healthz
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Registers routes, CORS headers, payload limit and the static mount.
  void mount(httplib::Server& server);

  std::size_t session_count() const;
  const ServiceConfig& config() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Blocks serving `config.host:config.port`. Returns 0 after a clean stop,
// 2 if the socket could not be bound.
int run_service(const ServiceConfig& config);

}  // namespace relight::app

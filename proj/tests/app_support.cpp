#include "app_support.hpp"

#include <stdexcept>

#include "relight/codec.hpp"
#include "relight/color.hpp"
#include "relight/olat.hpp"

namespace relight::test {

namespace {

std::string str(const Bytes& b) { return std::string(b.begin(), b.end()); }

ImageF mask_image(const Mask& m) {
  ImageF img(m.width(), m.height(), 1, ColorSpace::Scalar);
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) img.at(x, y, 0) = m.at(x, y);
  return img;
}

}  // namespace

httplib::MultipartFormDataItems Bundle::parts(bool albedo, bool skin) const {
  httplib::MultipartFormDataItems items{
      {"image", image_png, "image.png", "image/png"},
      {"normals", normals_pfm, "normals.pfm", "application/octet-stream"},
      {"subject", subject_png, "subject.png", "image/png"},
  };
  if (albedo) items.push_back({"albedo", albedo_pfm, "albedo.pfm", "application/octet-stream"});
  if (skin) items.push_back({"skin", skin_png, "skin.png", "image/png"});
  return items;
}

Bundle make_bundle(int size, std::uint64_t seed, bool heightfield) {
  olat::SceneSpec spec;
  spec.width = spec.height = size;
  spec.geometry = heightfield ? olat::Geometry::Heightfield : olat::Geometry::Sphere;
  spec.albedo = olat::AlbedoKind::Noise;
  spec.seed = seed;
  const auto scene = olat::make_scene(spec);
  Rng rng(seed, 1);
  const auto irr = env::prefilter_pair(env::synth_ellipse_env(32, env::random_ellipses({}, rng)));

  Bundle b;
  b.shading = phong_shade(scene.normals, irr);
  ImageF image = compose_relit(scene.albedo, b.shading);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      if (scene.subject.at(x, y) <= 0) image.set_rgb(x, y, {0.05f, 0.08f, 0.12f});
  // Skin: the central disk of the subject.
  Mask skin(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      if (scene.subject.at(x, y) > 0 && std::hypot(x - size / 2.0, y - size / 2.0) < size * 0.25) skin.set(x, y, 1);

  b.image_png = str(app::encode_srgb_png(image));
  b.normals_pfm = str(encode_pfm(scene.normals.normals));
  ImageF unorm = scene.normals.normals;
  for (float& v : unorm.data()) v = 0.5f * v + 0.5f;
  b.normals_png = str(encode_png(unorm, 16));
  b.subject_png = str(encode_png(mask_image(scene.subject)));
  b.albedo_pfm = str(encode_pfm(scene.albedo));
  b.skin_png = str(encode_png(mask_image(skin)));

  b.truth.image = app::decode_color(app::encode_srgb_png(image));
  b.truth.normals = scene.normals;
  b.truth.subject = scene.subject;
  b.truth.albedo = scene.albedo;
  b.truth.skin = skin;
  return b;
}

scribble::ScribbleMap dense_scribble(const ImageF& shading, const Mask& subject) {
  scribble::ScribbleMap scr{rgb_to_lab(shading), Mask(shading.width(), shading.height())};
  for (int y = 0; y < shading.height(); ++y)
    for (int x = 0; x < shading.width(); ++x) scr.valid.set(x, y, subject.at(x, y) > 0 ? 1.0f : 0.0f);
  return scr;
}

scribble::ScribbleMap simulated_scribble(const ImageF& shading, const Mask& subject, std::uint64_t seed) {
  scribble::SimParams p;
  p.seed = seed;
  return scribble::simulate(shading, subject, p);
}

std::string relight_body(const scribble::ScribbleMap& scr, const std::string& extra_fields) {
  std::string body = R"({"schema_version":1,"scribble":)" + app::encode_scribble_runs(scr).dump();
  if (!extra_fields.empty()) body += "," + extra_fields;
  return body + "}";
}

TestServer::TestServer(app::ServiceConfig config) : service_(std::make_unique<app::Service>(std::move(config))) {
  service_->mount(server_);
  port_ = server_.bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw std::runtime_error("cannot bind a loopback port");
  thread_ = std::thread([this] { server_.listen_after_bind(); });
  server_.wait_until_ready();
}

TestServer::~TestServer() {
  server_.stop();
  if (thread_.joinable()) thread_.join();
}

httplib::Client TestServer::client() const {
  httplib::Client c("127.0.0.1", port_);
  c.set_read_timeout(120, 0);
  c.set_write_timeout(120, 0);
  return c;
}

std::string TestServer::create(const httplib::MultipartFormDataItems& parts) const {
  auto c = client();
  auto res = c.Post("/v1/sessions", parts);
  if (!res || res->status != 201) throw std::runtime_error("session creation failed");
  return nlohmann::json::parse(res->body).at("session_id").get<std::string>();
}

}  // namespace relight::test

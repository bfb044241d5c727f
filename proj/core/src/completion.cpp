#include "relight/completion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "relight/color.hpp"
#include "relight/resample.hpp"

namespace relight::completion {
namespace {

constexpr double kUnconstrainedWeight = 1e-4;

// Area average to (w, h); identity when the size already matches.
ImageF shrink(const ImageF& img, int w, int h) {
  if (img.width() == w && img.height() == h) return img;
  return resample(img, w, h, ResampleFilter::Box);
}

// Assigns every non-node pixel the value of its nearest node by breadth-first
// growth in raster order, so the result is deterministic.
void fill_outside(std::vector<double>& value, const std::vector<int>& node_of, int w, int h) {
  std::vector<int> queue;
  std::vector<char> done(value.size(), 0);
  for (std::size_t i = 0; i < node_of.size(); ++i)
    if (node_of[i] >= 0) {
      done[i] = 1;
      queue.push_back(static_cast<int>(i));
    }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int i = queue[head];
    const int x = i % w, y = i / w;
    const int nx[4] = {x, x - 1, x + 1, x};
    const int ny[4] = {y - 1, y, y, y + 1};
    for (int k = 0; k < 4; ++k) {
      if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
      const int j = ny[k] * w + nx[k];
      if (done[j]) continue;
      done[j] = 1;
      for (int c = 0; c < 3; ++c) value[3 * static_cast<std::size_t>(j) + c] = value[3 * static_cast<std::size_t>(i) + c];
      queue.push_back(j);
    }
  }
}

}  // namespace

void validate(const CompletionParams& p) {
  require(p.data_weight > 0 && std::isfinite(p.data_weight), "CompletionParams: data_weight must be positive");
  require(p.normal_sharpness >= 0 && std::isfinite(p.normal_sharpness),
          "CompletionParams: normal_sharpness must be non-negative");
  require(p.connectivity == 4 || p.connectivity == 8, "CompletionParams: connectivity must be 4 or 8");
  require(p.solve_h >= 0, "CompletionParams: solve_h must be non-negative");
  require(p.tol > 0, "CompletionParams: tol must be positive");
  require(p.max_iter >= 1, "CompletionParams: max_iter must be >= 1");
}

int solve_height(const CompletionParams& p, int full_h) {
  const int h = p.solve_h > 0 ? p.solve_h : full_h / 4;
  return std::clamp(h, 1, full_h);
}

bool PreparedGraph::compatible(const CompletionParams& p) const {
  return kappa == p.normal_sharpness && connectivity == p.connectivity && h == solve_height(p, full_h);
}

PreparedGraph prepare_graph(const NormalMap& n, const Mask& subject, const CompletionParams& p) {
  validate(p);
  require(n.normals.channels() == 3, "prepare_graph: normals must have 3 channels");
  require(n.valid.matches(n.normals), "prepare_graph: normal validity mask size differs");
  require(subject.matches(n.normals), "prepare_graph: subject mask size differs from normals");

  PreparedGraph g;
  g.full_w = n.width();
  g.full_h = n.height();
  g.h = solve_height(p, g.full_h);
  g.w = std::max(1, static_cast<int>(std::lround(static_cast<double>(g.full_w) * g.h / g.full_h)));
  if (g.h == g.full_h) g.w = g.full_w;
  g.kappa = p.normal_sharpness;
  g.connectivity = p.connectivity;
  g.subject = subject;

  // Mask-weighted normal average per low-res cell.
  ImageF weighted(g.full_w, g.full_h, 4, ColorSpace::Scalar);
  for (int y = 0; y < g.full_h; ++y)
    for (int x = 0; x < g.full_w; ++x) {
      const float s = subject.at(x, y);
      const float m = n.valid.at(x, y) > 0 ? s : 0.0f;
      for (int c = 0; c < 3; ++c) weighted.at(x, y, c) = m * n.normals.at(x, y, c);
      weighted.at(x, y, 3) = s;
    }
  const ImageF lo = shrink(weighted, g.w, g.h);

  const std::size_t cells = static_cast<std::size_t>(g.w) * g.h;
  g.node_of.assign(cells, -1);
  std::vector<Vec3> normal;
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) {
      if (!(lo.at(x, y, 3) > 1e-6f)) continue;
      const std::size_t i = static_cast<std::size_t>(y) * g.w + x;
      g.node_of[i] = static_cast<int>(g.pixel_of.size());
      g.pixel_of.push_back(static_cast<int>(i));
      normal.push_back(normalize(Vec3{lo.at(x, y, 0), lo.at(x, y, 1), lo.at(x, y, 2)}));
    }

  auto weight = [&](int a, int b) {
    const Vec3& na = normal[a];
    const Vec3& nb = normal[b];
    if (dot(na, na) == 0.0 || dot(nb, nb) == 0.0) return 1.0;
    return std::exp(g.kappa * (dot(na, nb) - 1.0));
  };
  std::vector<WeightGraph::Edge> edges;
  const int dx[4] = {1, 0, 1, -1};
  const int dy[4] = {0, 1, 1, 1};
  const int dirs = p.connectivity == 8 ? 4 : 2;
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) {
      const int a = g.node_of[static_cast<std::size_t>(y) * g.w + x];
      if (a < 0) continue;
      for (int k = 0; k < dirs; ++k) {
        const int xx = x + dx[k], yy = y + dy[k];
        if (xx < 0 || xx >= g.w || yy >= g.h) continue;
        const int b = g.node_of[static_cast<std::size_t>(yy) * g.w + xx];
        if (b >= 0) edges.push_back({a, b, weight(a, b)});
      }
    }
  const int nodes = static_cast<int>(g.pixel_of.size());
  g.graph = WeightGraph::from_edges(nodes, edges);

  g.component.assign(nodes, -1);
  std::vector<int> stack;
  for (int s = 0; s < nodes; ++s) {
    if (g.component[s] >= 0) continue;
    g.component[s] = g.components;
    stack.push_back(s);
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      for (int k = g.graph.offsets[i]; k < g.graph.offsets[i + 1]; ++k) {
        const int j = g.graph.neighbors[k];
        if (g.component[j] < 0) {
          g.component[j] = g.components;
          stack.push_back(j);
        }
      }
    }
    ++g.components;
  }
  return g;
}

CompletionResult complete(const scribble::ScribbleMap& scr, const PreparedGraph& g, const CompletionParams& p) {
  validate(p);
  require(g.compatible(p), "complete: prepared graph was built with different parameters");
  require(scr.color.channels() == 3 && scr.color.space() == ColorSpace::Lab, "complete: scribble must be Lab");
  require(scr.width() == g.full_w && scr.height() == g.full_h, "complete: scribble size differs from normals");
  require(scr.valid.matches(scr.color), "complete: scribble validity mask size differs");
  const auto start = std::chrono::steady_clock::now();

  ImageF weighted(g.full_w, g.full_h, 4, ColorSpace::Scalar);
  bool any = false;
  for (int y = 0; y < g.full_h; ++y)
    for (int x = 0; x < g.full_w; ++x) {
      const float v = scr.valid.at(x, y) > 0 && g.subject.at(x, y) > 0 ? 1.0f : 0.0f;
      if (v == 0) continue;
      any = true;
      for (int c = 0; c < 3; ++c) weighted.at(x, y, c) = scr.color.at(x, y, c);
      weighted.at(x, y, 3) = 1.0f;
    }
  if (!any) throw EmptyScribbleError("complete: scribble has no valid pixel inside the subject");
  const ImageF lo = shrink(weighted, g.w, g.h);

  const int nodes = g.graph.nodes;
  std::vector<double> lambda(nodes, 0.0);
  std::vector<double> target[3];
  for (auto& t : target) t.assign(nodes, 0.0);
  std::vector<char> has_constraint(g.components, 0);
  double mean[3] = {0, 0, 0};
  double total = 0;
  CompletionReport rep;
  for (int i = 0; i < nodes; ++i) {
    const int px = g.pixel_of[i] % g.w, py = g.pixel_of[i] / g.w;
    const double f = lo.at(px, py, 3);
    if (!(f > 1e-6)) continue;
    lambda[i] = p.data_weight * f;
    for (int c = 0; c < 3; ++c) {
      target[c][i] = lo.at(px, py, c) / f;
      mean[c] += f * target[c][i];
    }
    total += f;
    has_constraint[g.component[i]] = 1;
    ++rep.constrained_nodes;
  }
  if (rep.constrained_nodes == 0) throw EmptyScribbleError("complete: scribble vanished at the working resolution");
  for (double& m : mean) m /= total;
  for (int i = 0; i < nodes; ++i) {
    if (has_constraint[g.component[i]]) continue;
    lambda[i] = kUnconstrainedWeight;
    for (int c = 0; c < 3; ++c) target[c][i] = mean[c];
  }

  const std::size_t cells = static_cast<std::size_t>(g.w) * g.h;
  std::vector<double> field(3 * cells, 0.0);
  for (int c = 0; c < 3; ++c) {
    std::vector<double> guess(nodes);
    for (int i = 0; i < nodes; ++i) guess[i] = lambda[i] > kUnconstrainedWeight ? target[c][i] : mean[c];
    SolveOptions opt;
    opt.tol = p.tol;
    opt.max_iter = p.max_iter;
    opt.initial = guess;
    SolveReport sr;
    const std::vector<double> s = solve_screened_poisson(g.graph, lambda, target[c], opt, &sr);
    rep.iterations[c] = sr.iterations;
    rep.residual[c] = sr.residual;
    for (int i = 0; i < nodes; ++i) field[3 * static_cast<std::size_t>(g.pixel_of[i]) + c] = s[i];
  }
  if (nodes > 0) fill_outside(field, g.node_of, g.w, g.h);

  ImageF lab_lo(g.w, g.h, 3, ColorSpace::Lab);
  auto d = lab_lo.data();
  for (std::size_t i = 0; i < field.size(); ++i) d[i] = static_cast<float>(field[i]);
  CompletionResult out;
  out.lab = (g.w == g.full_w && g.h == g.full_h) ? lab_lo : resample(lab_lo, g.full_w, g.full_h, ResampleFilter::Bilinear);
  out.lab.set_space(ColorSpace::Lab);
  out.shading = lab_to_rgb(out.lab);
  auto s = out.shading.data();
  for (int y = 0; y < g.full_h; ++y)
    for (int x = 0; x < g.full_w; ++x) {
      const std::size_t i = 3 * (static_cast<std::size_t>(y) * g.full_w + x);
      const bool in = g.subject.at(x, y) > 0;
      for (int c = 0; c < 3; ++c) s[i + c] = in ? std::max(0.0f, s[i + c]) : 0.0f;
    }

  rep.solve_w = g.w;
  rep.solve_h = g.h;
  rep.nodes = nodes;
  rep.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  out.report = rep;
  return out;
}

ImageF complete_shading(const scribble::ScribbleMap& scr, const NormalMap& n, const Mask& subject,
                        const CompletionParams& p, CompletionReport* report) {
  const PreparedGraph g = prepare_graph(n, subject, p);
  CompletionResult r = complete(scr, g, p);
  if (report) *report = r.report;
  return std::move(r.shading);
}

}  // namespace relight::completion

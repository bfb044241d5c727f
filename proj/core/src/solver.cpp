#include "relight/solver.hpp"

#include <cmath>

#include "relight/error.hpp"

namespace relight {

WeightGraph WeightGraph::from_edges(int nodes, std::span<const Edge> edges) {
  require(nodes >= 0, "WeightGraph: negative node count");
  WeightGraph g;
  g.nodes = nodes;
  g.offsets.assign(static_cast<std::size_t>(nodes) + 1, 0);
  for (const Edge& e : edges) {
    require(e.i >= 0 && e.j >= 0 && e.i < nodes && e.j < nodes && e.i != e.j, "WeightGraph: bad edge endpoint");
    require(e.w >= 0 && std::isfinite(e.w), "WeightGraph: edge weights must be finite and non-negative");
    ++g.offsets[e.i + 1];
    ++g.offsets[e.j + 1];
  }
  for (int i = 0; i < nodes; ++i) g.offsets[i + 1] += g.offsets[i];
  g.neighbors.resize(g.offsets.back());
  g.weights.resize(g.offsets.back());
  std::vector<int> fill(g.offsets.begin(), g.offsets.end() - 1);
  for (const Edge& e : edges) {
    g.neighbors[fill[e.i]] = e.j;
    g.weights[fill[e.i]++] = e.w;
    g.neighbors[fill[e.j]] = e.i;
    g.weights[fill[e.j]++] = e.w;
  }
  return g;
}

namespace {

void apply(const WeightGraph& g, std::span<const double> diag,
           const std::vector<double>& x, std::vector<double>& y) {
  for (int i = 0; i < g.nodes; ++i) {
    double acc = diag[i] * x[i];
    for (int k = g.offsets[i]; k < g.offsets[i + 1]; ++k) acc -= g.weights[k] * x[g.neighbors[k]];
    y[i] = acc;
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double screened_poisson_energy(const WeightGraph& g, std::span<const double> lambda, std::span<const double> target,
                               std::span<const double> s) {
  double e = 0;
  for (int i = 0; i < g.nodes; ++i) {
    for (int k = g.offsets[i]; k < g.offsets[i + 1]; ++k) {
      const int j = g.neighbors[k];
      if (j > i) e += g.weights[k] * (s[i] - s[j]) * (s[i] - s[j]);
    }
    if (lambda[i] > 0) e += lambda[i] * (s[i] - target[i]) * (s[i] - target[i]);
  }
  return e;
}

std::vector<double> solve_screened_poisson(const WeightGraph& g, std::span<const double> lambda,
                                           std::span<const double> target, const SolveOptions& opt,
                                           SolveReport* report) {
  const std::size_t n = static_cast<std::size_t>(g.nodes);
  require(lambda.size() == n && target.size() == n, "solve_screened_poisson: lambda/target size mismatch");
  require(opt.initial.empty() || opt.initial.size() == n, "solve_screened_poisson: initial guess size mismatch");
  require(opt.tol > 0 && opt.max_iter >= 0, "solve_screened_poisson: tol must be positive");
  bool any = false;
  for (double l : lambda) {
    require(l >= 0 && std::isfinite(l), "solve_screened_poisson: lambda must be finite and non-negative");
    any = any || l > 0;
  }
  if (!any) throw ContractError("solve_screened_poisson: no constraints; the system is singular");

  std::vector<double> diag(n), inv(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = lambda[i];
    for (int k = g.offsets[i]; k < g.offsets[i + 1]; ++k) d += g.weights[k];
    diag[i] = d;
    inv[i] = d > 0 ? 1.0 / d : 1.0;
    b[i] = lambda[i] * target[i];
  }

  std::vector<double> x(n, 0.0), r(n), z(n), p(n), q(n);
  if (!opt.initial.empty()) x.assign(opt.initial.begin(), opt.initial.end());
  apply(g, diag, x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];

  SolveReport rep;
  if (opt.track_energy) rep.energy.push_back(screened_poisson_energy(g, lambda, target, x));
  const double bnorm = std::sqrt(dot(b, b));
  const double scale = bnorm > 0 ? bnorm : 1.0;
  double res = std::sqrt(dot(r, r)) / scale;

  for (std::size_t i = 0; i < n; ++i) z[i] = inv[i] * r[i];
  p = z;
  double rz = dot(r, z);
  int it = 0;
  while (res > opt.tol && it < opt.max_iter) {
    apply(g, diag, p, q);
    const double pq = dot(p, q);
    if (!(pq > 0)) break;
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    ++it;
    res = std::sqrt(dot(r, r)) / scale;
    if (opt.track_energy) rep.energy.push_back(screened_poisson_energy(g, lambda, target, x));
    if (res <= opt.tol) break;
    for (std::size_t i = 0; i < n; ++i) z[i] = inv[i] * r[i];
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  rep.iterations = it;
  rep.residual = res;
  if (report) *report = rep;
  if (!(res <= opt.tol)) throw SolverError("screened Poisson solve did not converge", res, it);
  return x;
}

}  // namespace relight

#pragma once

#include <span>
#include <vector>

namespace relight {

// Undirected weighted graph in CSR form; every edge appears in both rows.
struct WeightGraph {
  int nodes = 0;
  std::vector<int> offsets;  // nodes + 1 entries
  std::vector<int> neighbors;
  std::vector<double> weights;

  // Builds CSR rows from an edge list (i, j, w), i != j, w >= 0.
  struct Edge {
    int i, j;
    double w;
  };
  static WeightGraph from_edges(int nodes, std::span<const Edge> edges);
};

struct SolveOptions {
  double tol = 1e-6;
  int max_iter = 2000;
  bool track_energy = false;
  // Starting point; zeros when empty.
  std::span<const double> initial;
};

struct SolveReport {
  int iterations = 0;
  double residual = 0;        // ||b - A x|| / ||b||
  std::vector<double> energy;  // E(x_k) per iteration when tracked, x_0 first
};

// Minimizes E(s) = sum_{i~j} w_ij (s_i - s_j)^2 + sum_i lambda_i (s_i - c_i)^2
// with Jacobi-preconditioned conjugate gradients on (L + diag(lambda)) s =
// diag(lambda) c. Throws ContractError when no lambda_i is positive and
// SolverError when the relative residual stays above tol after max_iter.
std::vector<double> solve_screened_poisson(const WeightGraph& graph, std::span<const double> lambda,
                                           std::span<const double> target, const SolveOptions& options = {},
                                           SolveReport* report = nullptr);

double screened_poisson_energy(const WeightGraph& graph, std::span<const double> lambda,
                               std::span<const double> target, std::span<const double> s);

}  // namespace relight

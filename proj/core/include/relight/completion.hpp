#pragma once

#include "relight/error.hpp"
#include "relight/image.hpp"
#include "relight/scribble.hpp"
#include "relight/shading.hpp"
#include "relight/solver.hpp"

namespace relight::completion {

struct CompletionParams {
  double data_weight = 100.0;      // lambda_d
  double normal_sharpness = 8.0;   // kappa
  int connectivity = 4;            // 4 or 8
  int solve_h = 0;                 // working height; 0 means full height / 4
  double tol = 1e-6;
  int max_iter = 2000;
};

void validate(const CompletionParams& p);

// Working height actually used for an image of the given height.
int solve_height(const CompletionParams& p, int full_h);

// Raised when the scribble has no valid pixel inside the subject.
class EmptyScribbleError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Geometry-only part of the problem: the low-resolution node set and edge
// weights w_ij = exp(kappa (n_i . n_j - 1)). Depends on normals, subject and
// (kappa, connectivity, solve_h), never on the scribble.
struct PreparedGraph {
  int full_w = 0, full_h = 0;
  int w = 0, h = 0;
  double kappa = 0;
  int connectivity = 4;
  Mask subject;                  // full resolution
  std::vector<int> node_of;      // per low-res pixel, -1 outside the subject
  std::vector<int> pixel_of;     // per node
  WeightGraph graph;
  std::vector<int> component;    // per node
  int components = 0;

  bool compatible(const CompletionParams& p) const;
};

PreparedGraph prepare_graph(const NormalMap& n, const Mask& subject, const CompletionParams& p);

struct CompletionReport {
  int solve_w = 0, solve_h = 0;
  int nodes = 0;
  int constrained_nodes = 0;
  int iterations[3] = {0, 0, 0};
  double residual[3] = {0, 0, 0};
  double elapsed_ms = 0;
};

struct CompletionResult {
  ImageF shading;  // linear RGB, full resolution, zero outside the subject
  ImageF lab;      // Lab, full resolution, before the RGB conversion
  CompletionReport report;
};

// Per Lab channel, minimizes sum_{i~j} w_ij (s_i - s_j)^2 +
// lambda_d sum_i f_i (s_i - c_i)^2 on the low-resolution subject graph, where
// f_i is the valid fraction of cell i and c_i the mean valid scribble color.
// Graph components without constraints are held weakly at the mean scribble
// color. The solution is extended outside the subject by nearest-node fill,
// upsampled bilinearly and converted to linear RGB.
CompletionResult complete(const scribble::ScribbleMap& scr, const PreparedGraph& graph, const CompletionParams& p);

ImageF complete_shading(const scribble::ScribbleMap& scr, const NormalMap& n, const Mask& subject,
                        const CompletionParams& p = {}, CompletionReport* report = nullptr);

}  // namespace relight::completion

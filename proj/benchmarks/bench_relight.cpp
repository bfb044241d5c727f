#include <benchmark/benchmark.h>

#include "relight/color.hpp"
#include "relight/completion.hpp"
#include "relight/envmap.hpp"
#include "relight/olat.hpp"
#include "relight/pipeline.hpp"
#include "relight/scribble.hpp"
#include "relight/seeds.hpp"
#include "relight/shading.hpp"
#include "relight/solver.hpp"

using namespace relight;

namespace {

env::EnvMap test_env(int h) {
  Rng rng(11);
  return env::synth_ellipse_env(h, env::random_ellipses({}, rng));
}

olat::SceneAssets test_scene(int size) {
  olat::SceneSpec spec;
  spec.width = spec.height = size;
  spec.geometry = olat::Geometry::Heightfield;
  spec.albedo = olat::AlbedoKind::Noise;
  spec.seed = 3;
  return olat::make_scene(spec);
}

void BM_PrefilterPair(benchmark::State& state) {
  const auto env = test_env(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(env::prefilter_pair(env));
}
BENCHMARK(BM_PrefilterPair)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Seeds(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const auto sc = test_scene(size);
  const ImageF lab = rgb_to_lab(phong_shade(sc.normals, env::prefilter_pair(test_env(32))));
  for (auto _ : state) benchmark::DoNotOptimize(scribble::seeds_segment(lab, 400));
}
BENCHMARK(BM_Seeds)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  const auto sc = test_scene(256);
  const ImageF shading = phong_shade(sc.normals, env::prefilter_pair(test_env(32)));
  scribble::SimParams p;
  for (auto _ : state) {
    p.seed++;
    benchmark::DoNotOptimize(scribble::simulate(shading, sc.subject, p));
  }
}
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);

// Screened Poisson on an n x n grid with 10% of nodes constrained.
void BM_Solve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(5);
  std::vector<WeightGraph::Edge> edges;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      if (x + 1 < n) edges.push_back({y * n + x, y * n + x + 1, 0.05 + rng.uniform()});
      if (y + 1 < n) edges.push_back({y * n + x, (y + 1) * n + x, 0.05 + rng.uniform()});
    }
  const auto graph = WeightGraph::from_edges(n * n, edges);
  std::vector<double> lambda(n * n, 0.0), target(n * n);
  for (int i = 0; i < n * n; ++i) {
    if (rng.uniform() < 0.1) lambda[i] = 100;
    target[i] = 100 * rng.uniform();
  }
  for (auto _ : state) benchmark::DoNotOptimize(solve_screened_poisson(graph, lambda, target));
}
BENCHMARK(BM_Solve)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Relight(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const auto sc = test_scene(size);
  const ImageF shading = phong_shade(sc.normals, env::prefilter_pair(test_env(32)));
  Portrait portrait{compose_relit(sc.albedo, shading), sc.normals, sc.subject, Mask(), sc.albedo};
  scribble::SimParams sp;
  const auto scr = scribble::simulate(shading, sc.subject, sp);
  const completion::CompletionParams cp;
  const auto graph = completion::prepare_graph(sc.normals, sc.subject, cp);
  for (auto _ : state) benchmark::DoNotOptimize(relight_portrait(portrait, graph, scr, std::nullopt, cp));
}
BENCHMARK(BM_Relight)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_IbrRender(benchmark::State& state) {
  olat::SceneSpec spec;
  spec.width = spec.height = 128;
  const auto stack = olat::synth_olat(spec, olat::make_light_rig(64));
  const auto env = test_env(32);
  for (auto _ : state) benchmark::DoNotOptimize(olat::ibr_render(stack, env));
}
BENCHMARK(BM_IbrRender)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

// Microbenchmarks for the hot paths: per-point curvature assembly, the
// Bochner Q split, synthetic lemma sampling, grid scans, and flow stepping.

#include <benchmark/benchmark.h>

#include "harmap/bochner.hpp"
#include "harmap/curvature.hpp"
#include "harmap/flow.hpp"
#include "harmap/lemma.hpp"
#include "harmap/manifold.hpp"
#include "harmap/map_model.hpp"
#include "harmap/prescription.hpp"

using namespace harmap;

namespace {

ChartPoint sphere_point(int m) {
  Vector x = Vector::Constant(m, 0.3);
  return ChartPoint(0, x);
}

GridSpec torus_grid(int m, int nodes) {
  GridSpec grid;
  grid.chart = 0;
  grid.origin = Vector::Zero(m);
  grid.shape = Eigen::VectorXi::Constant(m, nodes);
  grid.spacing = 1.0 / nodes;
  return grid;
}

}  // namespace

static void BM_CurvatureBundle(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const ManifoldModel sph = ManifoldModel::round_sphere(m, 1.0);
  const ChartPoint p = sphere_point(m);
  for (auto _ : state) {
    benchmark::DoNotOptimize(curvature_bundle(sph, p));
  }
}
BENCHMARK(BM_CurvatureBundle)->Arg(2)->Arg(3)->Arg(4);

static void BM_SectionalFd(benchmark::State& state) {
  const ManifoldModel fd = ManifoldModel::round_sphere(3, 1.0).fd_variant(8e-3, 8e-3);
  const ChartPoint p = sphere_point(3);
  Vector x(3), y(3);
  x << 1.0, 0.2, -0.1;
  y << 0.1, 1.0, 0.4;
  const PlaneSpec plane{x, y};
  for (auto _ : state) {
    benchmark::DoNotOptimize(sectional(fd, p, plane));
  }
}
BENCHMARK(BM_SectionalFd);

static void BM_QSplit(benchmark::State& state) {
  const ManifoldModel sph = ManifoldModel::round_sphere(2, 1.0);
  const MapModel id = MapModel::identity_map(sph.scaled(4.0), sph);
  const ChartPoint p = sphere_point(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(q_split(id, p, 1.0));
  }
}
BENCHMARK(BM_QSplit);

static void BM_LemmaSample(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(make_lemma_sample(3, n, 1.0, seed++));
  }
}
BENCHMARK(BM_LemmaSample)->Arg(3)->Arg(4);

static void BM_Q1Evaluation(benchmark::State& state) {
  const LemmaSample s = make_lemma_sample(3, 4, 1.0, 99u);
  for (auto _ : state) {
    benchmark::DoNotOptimize(q1_evaluation(s.dphi, s.curvature, s.k));
  }
}
BENCHMARK(BM_Q1Evaluation);

static void BM_BochnerScan(benchmark::State& state) {
  const int nodes = static_cast<int>(state.range(0));
  const ManifoldModel torus = ManifoldModel::flat_torus(2);
  Matrix a(2, 2);
  a << 1, 0, 0, 2;
  const MapModel map = MapModel::linear_torus(torus, torus, a);
  const GridSpec grid = torus_grid(2, nodes);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bochner_residual(map, grid, 0.0));
  }
  state.SetItemsProcessed(state.iterations() * nodes * nodes);
}
BENCHMARK(BM_BochnerScan)->Arg(8)->Arg(16);

static void BM_FlowStep(benchmark::State& state) {
  const int nodes = static_cast<int>(state.range(0));
  const ManifoldModel torus = ManifoldModel::flat_torus(2);
  const MapModel seed = MapModel::sin_perturbed(torus, torus, 0.1);
  const GridSpec grid = torus_grid(2, nodes);
  const FlowProblem problem = flow_problem(seed, grid);
  const FlowState s = seed_state(seed, grid);
  FlowConfig config;
  config.dt = 0.2 / (nodes * nodes);
  for (auto _ : state) {
    benchmark::DoNotOptimize(flow_step(problem, s, config));
  }
  state.SetItemsProcessed(state.iterations() * nodes * nodes);
}
BENCHMARK(BM_FlowStep)->Arg(16)->Arg(64);

static void BM_PrescribedRicci(benchmark::State& state) {
  const ManifoldModel sph = ManifoldModel::round_sphere(2, 1.0);
  const ManifoldModel g = sph.scaled(2.0);
  const std::vector<ChartPoint> points(8, sphere_point(2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(prescribed_ricci_residual(g, sph, 1.0, points));
  }
  state.SetItemsProcessed(state.iterations() * points.size());
}
BENCHMARK(BM_PrescribedRicci);

BENCHMARK_MAIN();

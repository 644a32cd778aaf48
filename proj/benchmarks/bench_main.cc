#include <benchmark/benchmark.h>

#include <random>

#include "wavesync/optimizer.h"
#include "wavesync/proxy_graph.h"
#include "wavesync/spectral.h"

namespace {

using namespace wavesync;

PoseGraph line_graph(int samples) {
  PoseGraph g;
  for (int k = 0; k < samples; ++k) {
    PoseNode n;
    n.node_id = k;
    n.timestamp_ns = static_cast<std::int64_t>(k) * 500'000'000;
    n.submap_id = k / 40;
    n.pose = Pose::from_translation({k * 1.0, std::sin(k * 0.05) * 4.0, 0.0});
    g.add_node(n);
  }
  return g;
}

void bm_build_proxy(benchmark::State& state) {
  const PoseGraph g = line_graph(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_proxy(g, 7.0, 7.0 / 3.0));
  }
}
BENCHMARK(bm_build_proxy)->Arg(200)->Arg(800);

void bm_eigendecompose(benchmark::State& state) {
  const PoseGraph g = line_graph(static_cast<int>(state.range(0)));
  const Laplacian lap = laplacian(build_proxy(g, 7.0, 7.0 / 3.0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(eigendecompose(lap));
  }
}
BENCHMARK(bm_eigendecompose)->Arg(100)->Arg(400)->Arg(800);

void bm_wavelet_features(benchmark::State& state) {
  const PoseGraph g = line_graph(static_cast<int>(state.range(0)));
  const Laplacian lap = laplacian(build_proxy(g, 7.0, 7.0 / 3.0));
  const SpectralBasis basis = eigendecompose(lap);
  const FilterBank bank = FilterBank::meyer(basis.lambda_max());
  const Eigen::VectorXd f = Eigen::VectorXd::Random(basis.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(wavelet_features(basis, bank, f));
  }
}
BENCHMARK(bm_wavelet_features)->Arg(200)->Arg(600);

void bm_kron_reduce(benchmark::State& state) {
  const PoseGraph g = line_graph(static_cast<int>(state.range(0)));
  const ProxyGraph p = build_proxy(g, 7.0, 7.0 / 3.0);
  const std::vector<int> keep = kron_select(laplacian(p));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kron_reduce(p, keep));
  }
}
BENCHMARK(bm_kron_reduce)->Arg(300)->Arg(900);

void bm_optimize_chain(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937 rng(5);
  std::normal_distribution<double> gauss(0.0, 0.01);
  PoseGraph g = line_graph(n);
  for (int k = 0; k + 1 < n; ++k) {
    RelativeConstraint e;
    e.from_id = k;
    e.to_id = k + 1;
    e.measurement =
        relative_pose(g.nodes()[k].pose, g.nodes()[k + 1].pose) *
        Pose::from_translation({gauss(rng), gauss(rng), 0.0});
    e.information = isotropic_information(0.05, 0.02);
    g.add_edge(e);
  }
  for (auto _ : state) {
    OptimizationProblem problem;
    problem.graph = g;
    problem.gauge_id = 0;
    problem.settings.max_iterations = 5;
    benchmark::DoNotOptimize(optimize(problem));
  }
}
BENCHMARK(bm_optimize_chain)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

// Throughput benchmarks for the hot paths: index construction, both
// pooling directions, skeleton training, and the sequence integrator.

#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <cstdint>
#include <numeric>

#include "dynagg/index.hpp"
#include "dynagg/integrate.hpp"
#include "dynagg/pool.hpp"
#include "dynagg/rng.hpp"
#include "dynagg/som.hpp"

namespace {

using namespace dynagg;

PointCloud random_cloud(std::uint64_t seed, Eigen::Index n) {
  Rng rng(seed);
  PointCloud cloud;
  cloud.positions.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index a = 0; a < 3; ++a)
      cloud.positions(i, a) = rng.uniform();
  return cloud;
}

Eigen::MatrixXd random_matrix(std::uint64_t seed, Eigen::Index rows,
                              Eigen::Index cols) {
  Rng rng(seed);
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      out(r, c) = rng.uniform(-1.0, 1.0);
  return out;
}

Skeleton skeleton_from(const Eigen::MatrixX3d& nodes) {
  Skeleton s;
  s.node_positions = nodes;
  const auto m = static_cast<std::uint32_t>(nodes.rows());
  s.grid_rows = 1;
  s.grid_cols = m;
  s.node_order.resize(m);
  std::iota(s.node_order.begin(), s.node_order.end(), 0u);
  return s;
}

void bench_index(benchmark::State& state) {
  const PointCloud cloud = random_cloud(11, 20000);
  const Skeleton skeleton =
      skeleton_from(random_cloud(12, 256).positions);
  for (auto _ : state) {
    IndexMatrix index = build_index(cloud, skeleton, 3);
    benchmark::DoNotOptimize(index.g);
  }
  state.SetItemsProcessed(state.iterations() * 20000);
}
BENCHMARK(bench_index)->Unit(benchmark::kMillisecond);

void bench_aggregate(benchmark::State& state) {
  const PointCloud cloud = random_cloud(21, 50000);
  const Skeleton skeleton =
      skeleton_from(random_cloud(22, 256).positions);
  const IndexMatrix index = build_index(cloud, skeleton, 3);
  const FeatureMatrix feats{random_matrix(23, 50000, 16),
                            FeatureSpace::point};
  const auto fn = static_cast<AggregateFn>(state.range(0));
  for (auto _ : state) {
    FeatureMatrix out = aggregate(feats, index, fn);
    benchmark::DoNotOptimize(out.values.data());
  }
  state.SetItemsProcessed(state.iterations() * 50000);
}
BENCHMARK(bench_aggregate)
    ->Arg(static_cast<int>(AggregateFn::semi_average))
    ->Arg(static_cast<int>(AggregateFn::mean))
    ->Arg(static_cast<int>(AggregateFn::max))
    ->Unit(benchmark::kMillisecond);

void bench_propagate(benchmark::State& state) {
  const PointCloud cloud = random_cloud(31, 50000);
  const Skeleton skeleton =
      skeleton_from(random_cloud(32, 256).positions);
  const IndexMatrix index = build_index(cloud, skeleton, 3);
  const FeatureMatrix node_feats{random_matrix(33, 256, 16),
                                 FeatureSpace::node};
  const auto fn = static_cast<PropagateFn>(state.range(0));
  for (auto _ : state) {
    FeatureMatrix out = propagate(node_feats, index, fn);
    benchmark::DoNotOptimize(out.values.data());
  }
  state.SetItemsProcessed(state.iterations() * 50000);
}
BENCHMARK(bench_propagate)
    ->Arg(static_cast<int>(PropagateFn::max))
    ->Arg(static_cast<int>(PropagateFn::mean))
    ->Unit(benchmark::kMillisecond);

void bench_som(benchmark::State& state) {
  const PointCloud cloud = random_cloud(41, 5000);
  SomConfig cfg;
  cfg.epochs_max = 30;
  cfg.rng_seed = 42;
  for (auto _ : state) {
    Skeleton skeleton = train_skeleton(cloud, init_skeleton(cloud, 64, cfg), cfg);
    benchmark::DoNotOptimize(skeleton.node_positions.data());
  }
  state.SetItemsProcessed(state.iterations() * 5000 * 30);
}
BENCHMARK(bench_som)->Unit(benchmark::kMillisecond);

void bench_gru_forward(benchmark::State& state) {
  const GruParams params = GruParams::seeded(16, 32, 16, 7);
  const PaddedSequence seq = pad_sequence(random_matrix(51, 256, 16), 256);
  for (auto _ : state) {
    Eigen::MatrixXd out = gru_forward(seq, params);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(bench_gru_forward)->Unit(benchmark::kMillisecond);

void bench_gru_backward(benchmark::State& state) {
  const GruParams params = GruParams::seeded(16, 32, 16, 7);
  const PaddedSequence seq = pad_sequence(random_matrix(51, 256, 16), 256);
  const Eigen::MatrixXd grad = random_matrix(52, 256, 16);
  GruContext ctx;
  gru_forward(seq, params, &ctx);
  for (auto _ : state) {
    GruGradients grads = gru_backward(grad, seq, params, ctx);
    benchmark::DoNotOptimize(grads.seq.data());
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(bench_gru_backward)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

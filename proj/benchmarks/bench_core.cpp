// Microbenchmarks for the hot paths: sparse aggregation, forward passes,
// gradient evaluation, and one TDGIA batch step.

#include <benchmark/benchmark.h>

#include "tdg/attack.hpp"
#include "tdg/grad.hpp"
#include "tdg/train.hpp"

using namespace tdg;

namespace {

Dataset bench_dataset(NodeId nodes, std::uint64_t seed) {
  SbmParams p;
  p.nodes = nodes;
  return synth_sbm(p, seed);
}

Model bench_model(const Dataset& ds, Architecture arch) {
  ModelSpec spec;
  spec.architecture = arch;
  if (arch == Architecture::sgc) spec.hidden_dims = {};
  return init_model(spec, ds.feature_dim(), ds.num_classes, 7);
}

}  // namespace

static void BM_NormalizeAdjacency(benchmark::State& state) {
  auto ds = bench_dataset(static_cast<NodeId>(state.range(0)), 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(normalize_adjacency(ds.graph, NormScheme::gcn_symmetric));
}
BENCHMARK(BM_NormalizeAdjacency)->Arg(500)->Arg(2000);

static void BM_Spmm(benchmark::State& state) {
  auto ds = bench_dataset(static_cast<NodeId>(state.range(0)), 1);
  auto adj = normalize_adjacency(ds.graph, NormScheme::gcn_symmetric);
  for (auto _ : state) benchmark::DoNotOptimize(spmm(adj, ds.features));
}
BENCHMARK(BM_Spmm)->Arg(500)->Arg(2000);

static void BM_Forward(benchmark::State& state) {
  auto ds = bench_dataset(500, 1);
  const auto arch = static_cast<Architecture>(state.range(0));
  auto model = bench_model(ds, arch);
  for (auto _ : state) benchmark::DoNotOptimize(predict_labels(model, ds));
}
BENCHMARK(BM_Forward)
    ->Arg(static_cast<int>(Architecture::gcn))
    ->Arg(static_cast<int>(Architecture::sgc))
    ->Arg(static_cast<int>(Architecture::sage_mean));

static void BM_InjectedFeatureGradient(benchmark::State& state) {
  auto ds = bench_dataset(500, 1);
  auto model = bench_model(ds, Architecture::gcn);
  Injection inj;
  inj.n_injected = 20;
  for (NodeId i = 0; i < 20; ++i)
    for (int e = 0; e < 5; ++e)
      inj.cross_edges.emplace_back((i * 17 + static_cast<NodeId>(e) * 101) % ds.num_nodes(), i);
  inj.injected_features = Matrix::Zero(20, ds.feature_dim());
  auto attacked = apply_injection(ds, inj);
  auto labels = predict_labels(model, ds).labels;
  Matrix raw = Matrix::Random(20, ds.feature_dim());
  for (auto _ : state)
    benchmark::DoNotOptimize(grad_injected_features(model, attacked, ds.num_nodes(),
                                                    ds.test_idx, labels, LossSpec{},
                                                    FeatureMap::smoothmap, {-1.0, 1.0}, raw));
}
BENCHMARK(BM_InjectedFeatureGradient);

static void BM_TdgiaBatch(benchmark::State& state) {
  auto ds = bench_dataset(500, 1);
  auto model = bench_model(ds, Architecture::gcn);
  Budget b{.max_nodes = 4, .max_degree = 5, .feature_bounds = {-1.0, 1.0}};
  AttackConfig c;
  c.batch_fraction = 1.0;  // exactly one batch
  c.opt_epochs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(tdgia_attack(model, ds, b, c));
}
BENCHMARK(BM_TdgiaBatch)->Arg(10)->Arg(100);

BENCHMARK_MAIN();

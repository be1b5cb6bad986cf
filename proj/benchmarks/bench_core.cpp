#include <benchmark/benchmark.h>

#include <memory>

#include "cafda/cafda.hpp"
#include "cafda/estimator.hpp"
#include "cafda/harness.hpp"
#include "cafda/synthetic.hpp"

namespace {

using namespace cafda;

std::shared_ptr<const Dataset> task(std::size_t n) {
  SyntheticTaskConfig c;
  c.n_samples = n;
  c.dimension = 5;
  c.n_clusters = 1;
  return std::make_shared<const Dataset>(make_synthetic(c));
}

PoolState split_of(const Dataset& data, double fraction) {
  SplitConfig s;
  s.init_fraction = fraction;
  return initial_split(data.labels, s);
}

void ForestFit(benchmark::State& state) {
  const auto data = task(5000);
  const auto pool = split_of(*data, static_cast<double>(state.range(0)) / 5000.0);
  EstimatorConfig config;
  for (auto _ : state) {
    auto est = fit(pool, data->features, config);
    benchmark::DoNotOptimize(est);
  }
  state.SetComplexityN(static_cast<benchmark::IterationCount>(pool.labeled().size()));
}
BENCHMARK(ForestFit)->Arg(50)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond)->Complexity();

void ForestScorePool(benchmark::State& state) {
  const auto data = task(static_cast<std::size_t>(state.range(0)));
  const auto pool = split_of(*data, 0.05);
  const auto est = fit(pool, data->features, EstimatorConfig{});
  for (auto _ : state) {
    double total = 0.0;
    for (RowId r : pool.unlabeled()) total += est.p1(data->features.row(r));
    benchmark::DoNotOptimize(total);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(pool.unlabeled().size()));
}
BENCHMARK(ForestScorePool)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void WeightUpdate(benchmark::State& state) {
  const CafdaConfig config;
  auto w = init_weights(static_cast<std::size_t>(state.range(0)));
  Rng rng(1);
  for (auto _ : state) {
    w = update_weights(w, rng.index(w.size()), rng.uniform() < 0.1 ? 1.0 : 0.0, config);
    benchmark::DoNotOptimize(w);
  }
}
BENCHMARK(WeightUpdate)->Arg(5)->Arg(64);

// One full step of the default mixture (pick, advise, label, refit).
void CafdaStep(benchmark::State& state) {
  const auto data = task(2000);
  RunConfig config;
  config.horizon = 1000;
  RunEngine engine(data, config);
  for (auto _ : state) {
    if (engine.finished()) {
      state.SkipWithError("pool exhausted");
      break;
    }
    const auto& p = engine.propose();
    benchmark::DoNotOptimize(engine.answer(data->labels.at(p.row_id)));
  }
}
BENCHMARK(CafdaStep)->Iterations(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <numeric>

#include "keydyn/forest.hpp"
#include "keydyn/pipeline.hpp"
#include "keydyn/synth.hpp"

using namespace keydyn;

namespace {

// 5 synthetic users, L = 100: 300 samples x 8820 features.
const Dataset& corpus() {
  static const Dataset data = [] {
    GenConfig gen;
    gen.num_users = 5;
    const auto fc = featurize(generate_corpus(gen), WindowConfig{100});
    std::vector<std::size_t> all(fc.samples.size());
    std::iota(all.begin(), all.end(), 0);
    return to_dataset(fc.samples, fc.users.size(), all);
  }();
  return data;
}

}  // namespace

static void BM_BestSplit(benchmark::State& state) {
  const auto& data = corpus();
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<std::size_t> features(static_cast<std::size_t>(state.range(0)));
  std::iota(features.begin(), features.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(best_split(data, rows, features, 2));
}
BENCHMARK(BM_BestSplit)->Arg(93)->Arg(8820)->Unit(benchmark::kMicrosecond);

static void BM_FitForest(benchmark::State& state) {
  ForestConfig cfg;
  cfg.n_estimators = static_cast<std::size_t>(state.range(0));
  cfg.num_threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(fit_forest(corpus(), cfg));
}
BENCHMARK(BM_FitForest)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_Predict(benchmark::State& state) {
  ForestConfig cfg;
  cfg.n_estimators = 100;
  const auto model = fit_forest(corpus(), cfg);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(corpus().row(i++ % corpus().size())));
}
BENCHMARK(BM_Predict);

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "keydyn/kdi.hpp"
#include "keydyn/synth.hpp"

using namespace keydyn;

namespace {

std::vector<Keystroke> one_session(std::size_t n) {
  GenConfig cfg;
  cfg.num_users = 1;
  cfg.sessions_per_user = 1;
  cfg.keystrokes_per_session = n;
  return generate_corpus(cfg).front().keystrokes;
}

}  // namespace

static void BM_BuildKdi(benchmark::State& state) {
  const auto ks = one_session(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_kdi(ks));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildKdi)->Arg(50)->Arg(75)->Arg(100);

static void BM_FlattenRoundTrip(benchmark::State& state) {
  const Kdi kdi = build_kdi(one_session(100));
  for (auto _ : state) benchmark::DoNotOptimize(unflatten(flatten(kdi)));
}
BENCHMARK(BM_FlattenRoundTrip);

static void BM_Cutout(benchmark::State& state) {
  const Kdi kdi = build_kdi(one_session(100));
  const CutoutConfig cfg{8, 1, 1.0};
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(apply_cutout(kdi, cfg, seed++));
}
BENCHMARK(BM_Cutout);

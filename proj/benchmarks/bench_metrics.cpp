#include <benchmark/benchmark.h>

#include <random>

#include "lmcl/metrics.hpp"
#include "lmcl/synth.hpp"

using namespace lmcl;

namespace {

void BM_Alignment(benchmark::State& state) {
  const auto layouts = synth_grammar(1, static_cast<std::size_t>(state.range(0)), Profile::single_column_doc);
  for (auto _ : state) benchmark::DoNotOptimize(alignment(layouts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Alignment)->Arg(100)->Arg(1000);

void BM_Fid(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  std::normal_distribution<double> n;
  Tensor a({500, d}), b({500, d});
  for (double& v : a.data()) v = n(rng);
  for (double& v : b.data()) v = n(rng) + 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(fid(a, b));
}
BENCHMARK(BM_Fid)->Arg(64)->Arg(512);

}  // namespace

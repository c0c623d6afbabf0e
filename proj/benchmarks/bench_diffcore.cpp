#include <benchmark/benchmark.h>

#include <random>

#include "lmcl/ops.hpp"

using namespace lmcl;

namespace {

Tensor random(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : t.data()) v = u(rng);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random({n, n}, rng);
  const Tensor b = random({n, n}, rng);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(matmul(tape.constant(a), tape.constant(b)).value());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  ParamStore store;
  store.add("a", random({n, n}, rng));
  store.add("b", random({n, n}, rng));
  for (auto _ : state) {
    Tape tape;
    const Var loss = sum(matmul(tape.param(store, "a"), tape.param(store, "b")));
    benchmark::DoNotOptimize(tape.backward(loss));
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(32)->Arg(64);

void BM_Conv2d(benchmark::State& state) {
  const auto res = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const Tensor input = random({16, 8, res, res}, rng);
  const Tensor kernels = random({8, 8, 3, 3}, rng);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(conv2d(tape.constant(input), tape.constant(kernels)).value());
  }
}
BENCHMARK(BM_Conv2d)->Arg(16)->Arg(32);

void BM_Conv2dBackward(benchmark::State& state) {
  Rng rng(4);
  ParamStore store;
  store.add("k", random({8, 8, 3, 3}, rng));
  const Tensor input = random({16, 8, 16, 16}, rng);
  for (auto _ : state) {
    Tape tape;
    const Var loss = sum(conv2d(tape.constant(input), tape.param(store, "k")));
    benchmark::DoNotOptimize(tape.backward(loss));
  }
}
BENCHMARK(BM_Conv2dBackward);

}  // namespace

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "lmcl/encoder.hpp"
#include "lmcl/mcl.hpp"
#include "lmcl/model.hpp"
#include "lmcl/ops.hpp"
#include "lmcl/synth.hpp"

using namespace lmcl;

namespace {

std::vector<Prefix> prefixes(const std::vector<Layout>& layouts) {
  std::vector<Prefix> out;
  for (const auto& l : layouts) out.emplace_back(Prefix(l.objects).first(l.objects.size() - 1));
  return out;
}

void BM_EncoderForward(benchmark::State& state) {
  const auto profile = Profile::double_column_doc;
  const auto layouts = synth_grammar(1, static_cast<std::size_t>(state.range(0)), profile);
  const auto batch = prefixes(layouts);
  const Encoder enc(EncoderConfig::desk(), profile_vocabulary(profile).size());
  ParamStore store;
  Rng rng(1);
  enc.init(store, rng);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(enc.encode(tape, store, batch).value());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncoderForward)->Arg(16)->Arg(64);

void BM_ModelLossBackward(benchmark::State& state) {
  const auto profile = Profile::double_column_doc;
  const auto layouts = synth_grammar(2, 16, profile);
  auto pairs = teacher_forced_pairs(layouts);
  pairs.resize(std::min<std::size_t>(pairs.size(), static_cast<std::size_t>(state.range(0))));
  LayoutModel model(profile_vocabulary(profile), ModelConfig::desk());
  model.init(2);
  for (auto _ : state) {
    Tape tape;
    const auto terms = model.total_loss(tape, pairs, LossWeights{});
    benchmark::DoNotOptimize(tape.backward(terms.total));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pairs.size()));
}
BENCHMARK(BM_ModelLossBackward)->Arg(64);

void BM_WtaLoss(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const std::size_t batch = 64;
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Tensor> hyps(m, Tensor({batch, 4}));
  for (auto& h : hyps)
    for (double& v : h.data()) v = u(rng);
  Tensor y({batch, 4});
  for (double& v : y.data()) v = u(rng);
  Tensor log_phi({batch, m}, -std::log(static_cast<double>(m)));
  const LossVariant variant = LossVariant::parse("mcl");
  for (auto _ : state) {
    Tape tape;
    std::vector<Var> hv;
    for (const auto& h : hyps) hv.push_back(tape.constant(h));
    const Var loss = wta_loss(l1_matrix(hv, tape.constant(y)), variant, tape.constant(log_phi));
    benchmark::DoNotOptimize(loss.value());
  }
}
BENCHMARK(BM_WtaLoss)->Arg(10)->Arg(32);

}  // namespace

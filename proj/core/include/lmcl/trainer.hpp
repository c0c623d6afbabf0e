#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmcl/model.hpp"

namespace lmcl {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::size_t t = 0;

  static AdamState for_params(const ParamStore& params);
};

/// Bias-corrected Adam update of every parameter. Parameters with an all-zero
/// gradient still advance their moments, as in the standard algorithm.
/// `lr_scale`, when non-empty, multiplies the rate per parameter tensor.
void adam_step(ParamStore& params, const Gradients& grads, AdamState& state, double lr, const AdamConfig& cfg = {},
               std::span<const double> lr_scale = {});

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_global_norm(Gradients& grads, double max_norm);

struct TrainConfig {
  ModelConfig model = ModelConfig::desk();
  double learning_rate = 1e-3;
  // Learning rate is multiplied geometrically from 1 down to this factor over
  // the run; 1 keeps it fixed.
  double lr_final_factor = 1.0;
  // The mixture layer (mix.*) learns at this fraction of the rate so pairing
  // settles before phi saturates and starves the winners of gradient.
  double mixture_lr_factor = 0.25;
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  LossWeights weights;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;
  std::size_t eval_batch = 256;
  double time_budget_seconds = 0.0;  // 0: unlimited; otherwise stop after the epoch that crosses it

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double category = 0.0;
  double stop = 0.0;
  double bbox = 0.0;
  double total = 0.0;
  std::size_t paired = 0;
  double unpaired_mass = 0.0;
  std::size_t k = 1;
  double learning_rate = 0.0;
  double seconds = 0.0;
};

struct EvalResult {
  double category = 0.0;
  double stop = 0.0;
  double bbox = 0.0;
  double total = 0.0;
  PairingSummary pairing;
};

/// Loss terms averaged over every pair (batched in order) plus pairing
/// diagnostics, using top-k = `k` for evolving WTA.
EvalResult evaluate(const LayoutModel& model, std::span<const TrainingPair> pairs, const LossWeights& weights,
                    std::size_t k = 1, std::size_t batch = 256);

struct TrainResult {
  LayoutModel model;  // parameters from the best epoch
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_total = 0.0;
  bool diverged = false;
  bool budget_exhausted = false;
  std::string diagnostic;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Trains from scratch on `corpus`. When `out_dir` is given the best model is
/// written to out_dir/model.ckpt (with its .json sidecar), the epoch log to
/// out_dir/log.csv and the run manifest to out_dir/manifest.json.
TrainResult train(const std::vector<Layout>& corpus, const Vocabulary& vocab, const TrainConfig& config,
                  const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                  const EpochCallback& on_epoch = nullptr);

/// FNV-1a 64 of the corpus in its JSON-lines form.
std::string corpus_hash(const std::vector<Layout>& corpus, const Vocabulary& vocab);

}  // namespace lmcl

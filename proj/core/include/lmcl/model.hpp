#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lmcl/encoder.hpp"
#include "lmcl/mcl.hpp"

namespace lmcl {

struct ModelConfig {
  EncoderConfig encoder = EncoderConfig::desk();
  std::size_t m = 10;
  std::size_t predictor_hidden = 64;
  std::size_t mixture_hidden = 64;
  std::size_t head_hidden = 64;
  LossVariant loss;
  bool renormalize = true;  // test-time phi-hat = 1/P over paired predictors
  double pair_tau = kDefaultPairTau;
  std::size_t max_objects = kDefaultMaxObjects;

  void validate() const;
  static ModelConfig desk();
  static ModelConfig full();
};

struct LossWeights {
  double category = 1.0;
  double stop = 1.0;
  double bbox = 40.0;
};

/// One teacher-forced step: encode `prefix`, predict `next`.
struct TrainingPair {
  Prefix prefix;
  LayoutObject next;
};

/// Splits every layout at every position: n pairs for an n-object layout,
/// prefixes of length 0..n-1. The stop target is next.stop.
std::vector<TrainingPair> teacher_forced_pairs(std::span<const Layout> layouts);

struct LossTerms {
  Var total;
  Var category;
  Var stop;
  Var bbox;
};

/// Per-example values gathered during a forward pass, used for pairing diagnostics.
struct BatchDiagnostics {
  std::vector<CategoryId> categories;
  std::vector<std::vector<double>> l1;   // [B][M]
  std::vector<std::vector<double>> phi;  // [B][M]
};

/// Pairing diagnostics per category and over the whole evaluation set.
struct PairingSummary {
  std::vector<PairingStats> per_category;
  std::size_t paired_total = 0;
  double unpaired_mass = 0.0;  // example-weighted over categories

  [[nodiscard]] std::vector<std::vector<bool>> paired_mask(std::size_t categories, std::size_t m) const;
};

PairingSummary summarize_pairing(const BatchDiagnostics& diag, std::size_t categories, std::size_t m, double tau);

class LayoutModel {
 public:
  LayoutModel(Vocabulary vocab, ModelConfig config);

  /// Fresh parameters from `seed`.
  void init(std::uint64_t seed);

  [[nodiscard]] Var encode(Tape& tape, PrefixBatch batch) const { return encoder_.encode(tape, params_, batch); }
  /// Category logits [B, C].
  [[nodiscard]] Var category_logits(Tape& tape, Var x) const;
  /// Stop logits [B, 1].
  [[nodiscard]] Var stop_logits(Tape& tape, Var x) const;
  [[nodiscard]] std::vector<Var> hypotheses(Tape& tape, Var x, CategoryId c) const {
    return bank_.predict(tape, params_, x, c);
  }
  /// log phi [B, M]; uniform when the model was not trained with a mixture layer.
  [[nodiscard]] Var log_phi(Tape& tape, Var x, std::span<const CategoryId> categories) const;

  /// w_c * NLL + w_s * BCE + w_b * WTA, each averaged over the batch.
  /// `k` is the evolving-WTA top-k for this step.
  LossTerms total_loss(Tape& tape, std::span<const TrainingPair> batch, const LossWeights& weights, std::size_t k = 1,
                       BatchDiagnostics* diag = nullptr) const;

  [[nodiscard]] const Vocabulary& vocabulary() const noexcept { return vocab_; }
  [[nodiscard]] const ModelConfig& config() const noexcept { return config_; }
  [[nodiscard]] const Encoder& encoder() const noexcept { return encoder_; }
  [[nodiscard]] const PredictorBank& bank() const noexcept { return bank_; }
  [[nodiscard]] const MixtureLayer& mixture() const noexcept { return mixture_; }
  [[nodiscard]] const ParamStore& params() const noexcept { return params_; }
  [[nodiscard]] ParamStore& params() noexcept { return params_; }

  [[nodiscard]] const std::vector<std::vector<bool>>& paired_mask() const noexcept { return paired_; }
  void set_pairing(const PairingSummary& summary);
  [[nodiscard]] const PairingSummary& pairing() const noexcept { return pairing_; }

  /// Writes parameters (plus the paired mask) to `path` and a JSON manifest
  /// with vocabulary, configuration and pairing diagnostics to `path`.json.
  void save(const std::filesystem::path& path) const;
  static LayoutModel load(const std::filesystem::path& path);
  [[nodiscard]] std::string manifest_json() const;

 private:
  Vocabulary vocab_;
  ModelConfig config_;
  Encoder encoder_;
  PredictorBank bank_;
  MixtureLayer mixture_;
  FeedForward2 category_head_;
  FeedForward2 stop_head_;
  ParamStore params_;
  std::vector<std::vector<bool>> paired_;
  PairingSummary pairing_;
};

/// Sample from softmax(logits / temperature).
CategoryId sample_category(std::span<const double> logits, double temperature, Rng& rng);

/// sigmoid(logit) > 0.5, or the layout has reached max_objects.
bool stop_decision(double logit, std::size_t count, std::size_t max_objects);

}  // namespace lmcl

#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmcl/layout.hpp"
#include "lmcl/nn.hpp"

namespace lmcl {

enum class LossKind { vanilla_wta, relaxed_wta, evolving_wta, mixture_wta };

struct LossVariant {
  LossKind kind = LossKind::mixture_wta;
  double epsilon = 0.05;  // relaxed_wta weight for non-winners

  /// Accepts the CLI spellings (wta, rwta, ewta, mcl) and the long names.
  static LossVariant parse(std::string_view text, double rwta_eps = 0.05);
  [[nodiscard]] std::string_view cli_name() const;
  [[nodiscard]] std::string_view long_name() const;
  void validate() const;

  friend bool operator==(const LossVariant&, const LossVariant&) = default;
};

/// k for evolving WTA: starts at M and halves (floor, min 1) at each of
/// ceil(log2 M) equal fractions of training; the final fraction uses k = 1.
struct EvolvingSchedule {
  std::size_t m = 1;
  std::size_t total_steps = 1;

  [[nodiscard]] std::size_t stages() const;
  [[nodiscard]] std::size_t k_at(std::size_t step) const;
};

inline constexpr double kPhiFloor = 1e-12;
inline constexpr double kDefaultPairTau = 0.05;

/// M x C two-layer predictors, one per (category, hypothesis). Outputs pass
/// through a sigmoid so every hypothesis lies in (0,1)^out.
class PredictorBank {
 public:
  PredictorBank() = default;
  PredictorBank(std::size_t m, std::size_t categories, std::size_t in, std::size_t hidden, std::size_t out = 4,
                std::string prefix = "bank");

  void init(ParamStore& store, Rng& rng) const;
  /// M hypotheses [B, out] for rows of `x` that all belong to `category`.
  [[nodiscard]] std::vector<Var> predict(Tape& tape, const ParamStore& store, Var x, CategoryId category) const;

  [[nodiscard]] std::size_t m() const noexcept { return m_; }
  [[nodiscard]] std::size_t categories() const noexcept { return categories_; }
  [[nodiscard]] std::size_t out() const noexcept { return out_; }
  [[nodiscard]] const FeedForward2& net(CategoryId c, std::size_t i) const { return nets_.at(c * m_ + i); }

 private:
  std::size_t m_ = 0;
  std::size_t categories_ = 0;
  std::size_t out_ = 4;
  std::vector<FeedForward2> nets_;
};

/// phi = softmax(F_d([x, onehot(c)])) over the M predictors; uniform at init.
class MixtureLayer {
 public:
  MixtureLayer() = default;
  MixtureLayer(std::size_t m, std::size_t categories, std::size_t in, std::size_t hidden, std::string prefix = "mix");

  void init(ParamStore& store, Rng& rng) const;
  /// log phi, [B, M]; row b is conditioned on categories[b].
  [[nodiscard]] Var log_phi(Tape& tape, const ParamStore& store, Var x, std::span<const CategoryId> categories) const;
  [[nodiscard]] Var phi(Tape& tape, const ParamStore& store, Var x, std::span<const CategoryId> categories) const;

  [[nodiscard]] std::size_t m() const noexcept { return net_.out; }

 private:
  std::size_t categories_ = 0;
  FeedForward2 net_;
};

/// [B, M] matrix of L1 distances between each hypothesis and y.
Var l1_matrix(std::span<const Var> hypotheses, Var y);

/// argmin with ties going to the lowest index.
std::size_t select_winner(std::span<const double> l1);

/// Per-row weights for the WTA family, [B, M]: vanilla and mixture give the
/// winner 1; relaxed gives non-winners epsilon; evolving gives the k best 1.
Tensor wta_weights(const Tensor& l1, const LossVariant& variant, std::size_t k = 1);

/// Mean over rows of sum_i weight_i * L1_i; for mixture_wta the winner's term
/// is additionally multiplied by -log(max(phi_w, 1e-12)). `log_phi` is
/// required for mixture_wta and ignored otherwise. Winners are appended to
/// `winners` when given.
Var wta_loss(Var l1, const LossVariant& variant, std::optional<Var> log_phi = std::nullopt, std::size_t k = 1,
             std::vector<std::size_t>* winners = nullptr);

struct PairingStats {
  std::vector<bool> paired;
  std::vector<std::size_t> wins;
  std::vector<double> mean_phi;
  std::size_t paired_count = 0;
  double unpaired_mass = 0.0;  // mean over examples of phi summed over unpaired predictors
  std::size_t examples = 0;
};

/// A predictor is paired when it wins at least once with L1 < tau.
/// `l1` and `phi` are [N, M] over an evaluation set.
PairingStats pair_report(const Tensor& l1, const Tensor& phi, double tau = kDefaultPairTau);

/// Renormalised: uniform over paired predictors (error when none are paired).
/// Otherwise a multinomial draw from phi.
std::size_t sample_predictor(std::span<const double> phi, const std::vector<bool>& paired, Rng& rng, bool renormalize);

}  // namespace lmcl

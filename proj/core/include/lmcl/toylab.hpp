#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmcl/mcl.hpp"

namespace lmcl {

using Point2 = std::array<double, 2>;

/// K ground-truth points reached from one constant input.
struct ToyTask {
  std::vector<Point2> ground_truths = {{0.2, 0.2}, {0.5, 0.8}, {0.8, 0.5}};
  std::size_t m = 10;

  /// K = 3 gives the default triangle; other K spread points on a circle of
  /// radius 0.3 around the canvas centre.
  static ToyTask with_ground_truths(std::size_t k, std::size_t m);
  [[nodiscard]] Point2 centroid() const;
  void validate() const;
};

struct ToyOptions {
  LossVariant variant;
  std::size_t steps = 8000;
  std::uint64_t seed = 0;
  double learning_rate = 0.001;
  // The mixture layer learns on a slower clock than the predictors so that
  // pairing settles before phi is boosted.
  double mixture_lr_factor = 0.25;  // constant over the run
  double lr_final_factor = 0.1;     // predictor lr decays geometrically to this factor
  std::size_t input_width = 8;
  double input_value = 3.0;
  std::size_t hidden = 32;
  std::size_t snapshot_every = 100;
  double stuck_delta = 0.05;
  double cover_threshold = 0.02;
  double pair_tau = kDefaultPairTau;
  double boost_threshold = 0.9;
};

struct ToySnapshot {
  std::size_t step = 0;
  std::vector<Point2> hypotheses;
  std::vector<double> phi;
};

struct ToySummary {
  std::vector<Point2> hypotheses;
  std::vector<double> phi;               // mixture output (uniform for WTA variants)
  std::vector<double> nearest_l1;        // per ground truth
  std::vector<bool> paired;              // nearest to some ground truth within pair_tau
  std::size_t paired_count = 0;
  std::size_t stuck_count = 0;           // farther than stuck_delta (L1) from every ground truth
  double unpaired_probability = 0.0;     // sampling weight on unpaired predictors
  double poor_probability = 0.0;         // sampling weight on stuck predictors
  double initial_phi_spread = 0.0;       // max phi - min phi before training
  std::optional<std::size_t> pairing_step;   // first step with every ground truth covered
  std::optional<std::size_t> boosting_step;  // first step with paired phi mass above boost_threshold
  bool converged = false;                // every ground truth covered at the end
};

struct ToyRun {
  ParamStore params;  // toy.bank.* and toy.mix.*
  std::vector<ToySnapshot> snapshots;
  std::vector<double> expected_loss;  // per step, averaged over ground truths before the update
  ToySummary summary;
};

/// Trains M two-dimensional predictors (and, for mixture_wta, the mixture
/// layer) on the toy task. Ground truths are drawn uniformly each step.
ToyRun run_toy(const ToyTask& task, const ToyOptions& options);

struct VariantStats {
  LossVariant variant;
  std::vector<ToySummary> runs;
  double mean_unpaired = 0.0;
  double sd_unpaired = 0.0;
  double mean_poor = 0.0;
  double sd_poor = 0.0;
  double mean_stuck = 0.0;
  double sd_stuck = 0.0;
  double mean_max_nearest = 0.0;  // worst ground-truth coverage per run, averaged
};

std::vector<VariantStats> compare_variants(const ToyTask& task, const ToyOptions& base,
                                           std::span<const LossVariant> variants, std::span<const std::uint64_t> seeds);

/// step,hypothesis,x,y,phi
void write_snapshots_csv(std::ostream& out, const ToyRun& run);
std::string summary_json(const ToySummary& s);

/// Writes the trained toy parameters plus a PATH.json sidecar (format
/// "layout-mcl-toy") holding the task, variant and pairing summary.
void save_toy(const std::filesystem::path& path, const ToyTask& task, const ToyOptions& options, const ToyRun& run);

}  // namespace lmcl

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lmcl/ops.hpp"
#include "lmcl/params.hpp"

namespace lmcl::testing {

inline constexpr double kFdStep = 1e-5;
inline constexpr double kFdRelTol = 1e-4;
inline constexpr double kFdAbsFloor = 1e-7;

using LossBuilder = std::function<Var(Tape&, const ParamStore&)>;

struct GradCheckResult {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double worst_rel = 0.0;  // over entries with |gradient| above the floor
  std::string worst;  // "name[index]: analytic vs numeric"
  [[nodiscard]] bool ok() const { return failures == 0 && checked > 0; }
};

/// Compares tape gradients of every parameter entry (or `per_tensor` sampled
/// entries per tensor) against central differences. An entry passes when the
/// absolute error is below the floor or the relative error below the tolerance.
GradCheckResult check_gradients(ParamStore& store, const LossBuilder& loss, std::size_t per_tensor = 0,
                                std::uint64_t seed = 0);

/// Reduces any tensor to a scalar with fixed random weights so every output
/// element contributes a distinct gradient.
Var project(Var out, std::uint64_t seed);

/// Uniform values in [lo, hi].
Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0);
/// Uniform magnitudes in [margin, 1] with random signs (keeps kinks out of reach).
Tensor away_from_zero(Shape shape, Rng& rng, double margin = 0.1);

struct GradCase {
  std::string name;
  ParamStore store;
  LossBuilder loss;
  std::size_t per_tensor = 0;
};

/// Every primitive and the composed networks (GRU, BiGRU, encoder branches,
/// predictor bank, mixture layer, WTA losses, full model loss).
std::vector<GradCase> gradient_cases();

}  // namespace lmcl::testing

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lmcl/model.hpp"

namespace lmcl {

inline constexpr double kSizeHintBandwidth = 0.1;

struct SizeHint {
  double w = 0.0;
  double h = 0.0;
  friend bool operator==(const SizeHint&, const SizeHint&) = default;
};

struct SoftConstraint {
  CategoryId category = 0;
  std::optional<SizeHint> size;
  friend bool operator==(const SoftConstraint&, const SoftConstraint&) = default;
};

struct GenerationRequest {
  std::vector<LayoutObject> hard;  // fixed prefix, emitted verbatim
  std::vector<SoftConstraint> soft;  // categories forced in order after the prefix
  std::size_t count = 1;
  std::size_t max_objects = kDefaultMaxObjects;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  double aspect = 1.0;
  std::optional<bool> renormalize;  // unset: use the model's setting

  /// Throws RequestError naming the offending field.
  void validate(std::size_t vocab_size) const;
};

class RequestError : public std::invalid_argument {
 public:
  RequestError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Parses the request wire form:
///   {"hard": [LayoutObject...], "soft": [{"category": "figure", "size": [w, h]}...],
///    "count": 5, "seed": 42, "temperature": 1.0, "max_objects": 10}
/// Unknown keys are ignored so callers can carry extra fields such as "format".
GenerationRequest parse_generation_request(std::string_view json, const Vocabulary& vocab);

/// phi_i *= exp(-|wh_i - hint|_1 / bandwidth), renormalised. Falls back to the
/// closest hypothesis when every weight underflows.
void reweight_by_size(std::span<double> weights, std::span<const SizeHint> hypothesis_sizes, const SizeHint& hint,
                      double bandwidth = kSizeHintBandwidth);

/// `count` candidates. Each starts with the hard prefix, then places the soft
/// categories in order (the stop head is ignored until they are exhausted),
/// then runs freely until the stop head fires or max_objects is reached.
/// Candidate i draws from its own stream derived from (seed, i).
std::vector<Layout> generate(const GenerationRequest& request, const LayoutModel& model);

}  // namespace lmcl

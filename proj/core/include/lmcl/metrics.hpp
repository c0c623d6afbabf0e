#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmcl/layout.hpp"
#include "lmcl/tensor.hpp"

namespace lmcl {

class Discriminator;

/// Sum over objects of the smallest left-edge, centre or right-edge (all
/// horizontal) distance to any other object. Single-object layouts give 0.
double layout_alignment(const Layout& layout);

/// Mean of layout_alignment over the corpus (normalised by layout count).
double alignment(std::span<const Layout> layouts);

inline constexpr std::size_t kFidMinSamples = 50;

/// Frechet distance between Gaussians fitted to two feature sets [N, D]
/// (unbiased covariance). The square root of C1 C2 is taken as the root of
/// the symmetric sqrt(C1) C2 sqrt(C1), negative eigenvalues clipped to 0.
/// Appends a warning when either set has fewer than kFidMinSamples rows.
double fid(const Tensor& a, const Tensor& b, std::vector<std::string>* warnings = nullptr);

/// Fraction of layouts the discriminator assigns to the fake class.
double fake_positive(std::span<const Layout> layouts, const Discriminator& disc);

struct DiversityStats {
  std::size_t layouts = 0;
  std::size_t distinct = 0;
  // Category-name sequence joined with ',' -> frequency in [0, 1].
  std::map<std::string, double> frequencies;
};

DiversityStats diversity_stats(std::span<const Layout> layouts, const Vocabulary& vocab);

struct MetricReport {
  double alignment = 0.0;
  std::optional<double> reference_alignment;
  std::optional<double> fid;
  std::optional<double> fake_positive;
  DiversityStats diversity;
  std::vector<std::string> warnings;

  [[nodiscard]] std::string to_json() const;
};

}  // namespace lmcl

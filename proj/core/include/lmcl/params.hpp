#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lmcl/tensor.hpp"

namespace lmcl {

/// Gradients aligned index-for-index with a ParamStore.
using Gradients = std::vector<Tensor>;

/// Named, ordered collection of learnable tensors.
class ParamStore {
 public:
  std::size_t add(std::string name, Tensor init);

  [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const;
  [[nodiscard]] std::size_t index(std::string_view name) const;

  [[nodiscard]] const Tensor& value(std::size_t i) const { return values_.at(i); }
  [[nodiscard]] Tensor& value(std::size_t i) { return values_.at(i); }
  [[nodiscard]] const Tensor& value(std::string_view name) const { return values_[index(name)]; }
  [[nodiscard]] Tensor& value(std::string_view name) { return values_[index(name)]; }
  [[nodiscard]] const std::string& name(std::size_t i) const { return names_.at(i); }

  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] std::size_t element_count() const noexcept;
  [[nodiscard]] Gradients zero_gradients() const;

  /// Copies values for every name present in both stores; shapes must agree.
  void assign_from(const ParamStore& other);

  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    return a.names_ == b.names_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

using Rng = std::mt19937_64;

/// Uniform fan-in initialisation: U(-sqrt(1/fan_in), +sqrt(1/fan_in)).
Tensor fan_in_uniform(Shape shape, std::size_t fan_in, Rng& rng);

/// Independent generator for stream `stream` derived from `seed`.
Rng derive_rng(std::uint64_t seed, std::uint64_t stream);

}  // namespace lmcl

#include "lmcl/params.hpp"

#include <cmath>
#include <stdexcept>

namespace lmcl {

std::size_t ParamStore::add(std::string name, Tensor init) {
  if (lookup_.contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  const auto idx = values_.size();
  lookup_.emplace(name, idx);
  names_.push_back(std::move(name));
  values_.push_back(std::move(init));
  return idx;
}

std::optional<std::size_t> ParamStore::find(std::string_view name) const {
  auto it = lookup_.find(std::string(name));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t ParamStore::index(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw std::out_of_range("unknown parameter: " + std::string(name));
}

std::size_t ParamStore::element_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : values_) n += t.size();
  return n;
}

Gradients ParamStore::zero_gradients() const {
  Gradients g;
  g.reserve(values_.size());
  for (const auto& t : values_) g.push_back(Tensor::zeros_like(t));
  return g;
}

void ParamStore::assign_from(const ParamStore& other) {
  for (std::size_t i = 0; i < other.size(); ++i) {
    if (auto j = find(other.name(i))) {
      if (values_[*j].shape() != other.value(i).shape()) {
        throw ShapeError("assign_from " + other.name(i), values_[*j].shape(), other.value(i).shape());
      }
      values_[*j] = other.value(i);
    }
  }
}

Tensor fan_in_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in == 0 ? 1 : fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x6c6d636cu};
  return Rng(seq);
}

}  // namespace lmcl

#include "lmcl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace lmcl {

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

ShapeError::ShapeError(std::string_view primitive, const Shape& a)
    : std::invalid_argument(std::string(primitive) + ": unsupported shape " + to_string(a)) {}

ShapeError::ShapeError(std::string_view primitive, const Shape& a, const Shape& b)
    : std::invalid_argument(std::string(primitive) + ": shape mismatch " + to_string(a) + " vs " +
                            to_string(b)) {}

ShapeError::ShapeError(std::string_view primitive, std::string_view detail)
    : std::invalid_argument(std::string(primitive) + ": " + std::string(detail)) {}

namespace {
void check_extents(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor", "rank-0 shapes are not allowed; use {1}");
  for (auto e : shape) {
    if (e == 0) throw ShapeError("tensor", "zero extent in " + to_string(shape));
  }
}
}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_extents(shape_);
  if (data_.size() != shape_size(shape_)) {
    throw ShapeError("tensor", "data length " + std::to_string(data_.size()) + " does not match shape " +
                                   to_string(shape_));
  }
}

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

Tensor Tensor::row(std::vector<double> values) {
  const auto n = values.size();
  return Tensor({1, n}, std::move(values));
}

Tensor Tensor::zeros_like(const Tensor& other) { return Tensor(other.shape(), 0.0); }

double Tensor::item() const {
  if (data_.size() != 1) throw ShapeError("item", shape_);
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) throw ShapeError("reshape", shape_, shape);
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double value) noexcept { std::fill(data_.begin(), data_.end(), value); }

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.shape_ != shape_) throw ShapeError("accumulate", shape_, other.shape_);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double k) noexcept {
  for (auto& v : data_) v *= k;
  return *this;
}

}  // namespace lmcl

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lmcl/params.hpp"
#include "lmcl/tensor.hpp"

namespace lmcl {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid for the tape's lifetime.
class Var {
 public:
  Var() = default;

  [[nodiscard]] const Tensor& value() const;
  [[nodiscard]] const Shape& shape() const { return value().shape(); }
  [[nodiscard]] Tape& tape() const { return *tape_; }
  [[nodiscard]] std::size_t id() const noexcept { return id_; }
  [[nodiscard]] bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records primitive applications in execution order and replays them in
/// reverse to accumulate adjoints. One tape per training step.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Differentiable leaf; its adjoint is available from grad_of() after backward().
  Var variable(Tensor value);
  /// Leaf bound to a learnable parameter. Repeated requests return the same node.
  Var param(const ParamStore& store, std::size_t index);
  Var param(const ParamStore& store, std::string_view name);

  /// Used by primitives. `backward` reads this node's adjoint and accumulates into inputs.
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  /// Reverse sweep from a single-element root. Returns parameter gradients
  /// aligned with the store used by param(); unused parameters get exact zeros.
  Gradients backward(Var root);

  [[nodiscard]] const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  [[nodiscard]] bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Adjoint buffer for node `id`, allocated as zeros on first access.
  Tensor& grad(std::size_t id);
  /// Adjoint of `v` after backward(), or nullptr if nothing reached it.
  [[nodiscard]] const Tensor* grad_of(Var v) const;

  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    std::ptrdiff_t param_index = -1;
  };

  std::deque<Node> nodes_;  // stable references across push_back
  const ParamStore* store_ = nullptr;
  std::unordered_map<std::size_t, std::size_t> param_nodes_;
};

}  // namespace lmcl

#include "lmcl/tape.hpp"

#include <stdexcept>

namespace lmcl {

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw std::logic_error("use of an empty Var");
  return tape_->value(id_);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, false, -1});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, true, -1});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(const ParamStore& store, std::size_t index) {
  if (store_ == nullptr) {
    store_ = &store;
  } else if (store_ != &store) {
    throw std::logic_error("a tape may only bind parameters from one ParamStore");
  }
  if (auto it = param_nodes_.find(index); it != param_nodes_.end()) return Var(this, it->second);
  nodes_.push_back(Node{store.value(index), {}, {}, {}, true, static_cast<std::ptrdiff_t>(index)});
  param_nodes_.emplace(index, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(const ParamStore& store, std::string_view name) { return param(store, store.index(name)); }

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  bool needs = false;
  for (auto i : inputs) needs = needs || nodes_[i].requires_grad;
  nodes_.push_back(Node{std::move(value), {}, std::move(inputs), needs ? std::move(backward) : BackwardFn{}, needs, -1});
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad(std::size_t id) {
  auto& node = nodes_[id];
  if (node.grad.empty()) node.grad = Tensor::zeros_like(node.value);
  return node.grad;
}

const Tensor* Tape::grad_of(Var v) const {
  const auto& g = nodes_.at(v.id()).grad;
  return g.empty() ? nullptr : &g;
}

Gradients Tape::backward(Var root) {
  if (root.tape_ != this) throw std::logic_error("backward: root belongs to another tape");
  if (value(root.id()).size() != 1) throw ShapeError("backward", "root must be scalar, got " + to_string(root.shape()));

  for (auto& n : nodes_) n.grad = Tensor{};
  grad(root.id()).fill(1.0);

  for (std::size_t k = root.id() + 1; k-- > 0;) {
    auto& node = nodes_[k];
    if (node.grad.empty() || !node.requires_grad || !node.backward) continue;
    node.backward(*this, k);
  }

  Gradients out = store_ != nullptr ? store_->zero_gradients() : Gradients{};
  for (const auto& [index, node_id] : param_nodes_) {
    const auto& g = nodes_[node_id].grad;
    if (!g.empty()) out[index] += g;
  }
  return out;
}

}  // namespace lmcl

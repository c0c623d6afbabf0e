#include "lmcl/nn.hpp"

#include <stdexcept>

namespace lmcl {

Var dense(Var x, Var w, Var b) { return add(matmul(x, w), b); }

void FeedForward2::init(ParamStore& store, Rng& rng) const {
  store.add(prefix + ".w1", fan_in_uniform({in, hidden}, in, rng));
  store.add(prefix + ".b1", Tensor({1, hidden}));
  store.add(prefix + ".w2", fan_in_uniform({hidden, out}, hidden, rng));
  store.add(prefix + ".b2", Tensor({1, out}));
}

Var FeedForward2::hidden_layer(Tape& tape, const ParamStore& store, Var x) const {
  return relu(dense(x, tape.param(store, prefix + ".w1"), tape.param(store, prefix + ".b1")));
}

Var FeedForward2::forward(Tape& tape, const ParamStore& store, Var x) const {
  return dense(hidden_layer(tape, store, x), tape.param(store, prefix + ".w2"), tape.param(store, prefix + ".b2"));
}

void add_gru_params(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden, Rng& rng) {
  store.add(prefix + ".w_ih", fan_in_uniform({in, 3 * hidden}, in, rng));
  store.add(prefix + ".w_hh", fan_in_uniform({hidden, 3 * hidden}, hidden, rng));
  store.add(prefix + ".b_ih", Tensor({1, 3 * hidden}));
  store.add(prefix + ".b_hh", Tensor({1, 3 * hidden}));
}

GruWeights bind_gru(Tape& tape, const ParamStore& store, const std::string& prefix) {
  return {tape.param(store, prefix + ".w_ih"), tape.param(store, prefix + ".w_hh"), tape.param(store, prefix + ".b_ih"),
          tape.param(store, prefix + ".b_hh")};
}

Var gru_cell(Var x, Var h_prev, const GruWeights& w) {
  const auto& ws = w.w_hh.shape();
  if (ws.size() != 2 || ws[1] != 3 * ws[0]) throw ShapeError("gru_cell", ws);
  const std::size_t hidden = ws[0];
  if (x.shape().size() != 2 || x.shape()[1] != w.w_ih.shape()[0]) throw ShapeError("gru_cell", x.shape(), w.w_ih.shape());
  if (h_prev.shape().size() != 2 || h_prev.shape()[1] != hidden || h_prev.shape()[0] != x.shape()[0]) {
    throw ShapeError("gru_cell", h_prev.shape(), Shape{x.shape()[0], hidden});
  }
  const Var gi = dense(x, w.w_ih, w.b_ih);
  const Var gh = dense(h_prev, w.w_hh, w.b_hh);
  const Var r = sigmoid(add(slice(gi, 0, hidden, 1), slice(gh, 0, hidden, 1)));
  const Var z = sigmoid(add(slice(gi, hidden, 2 * hidden, 1), slice(gh, hidden, 2 * hidden, 1)));
  const Var n = tanh(add(slice(gi, 2 * hidden, 3 * hidden, 1), mul(r, slice(gh, 2 * hidden, 3 * hidden, 1))));
  return add(n, mul(z, sub(h_prev, n)));
}

BiGruStates bigru(std::span<const Var> sequence, const GruWeights& fwd, const GruWeights& bwd,
                  std::span<const Var> masks) {
  if (sequence.empty()) throw std::invalid_argument("bigru: empty sequence");
  if (!masks.empty() && masks.size() != sequence.size()) {
    throw std::invalid_argument("bigru: mask count must match sequence length");
  }
  Tape& tape = sequence.front().tape();
  const std::size_t batch = sequence.front().shape()[0];
  const std::size_t T = sequence.size();

  auto step = [&](Var x, Var h, const GruWeights& w, std::size_t t) {
    const Var next = gru_cell(x, h, w);
    if (masks.empty()) return next;
    return add(h, mul(masks[t], sub(next, h)));
  };

  BiGruStates out;
  out.forward.reserve(T);
  out.backward.resize(T);
  Var h = tape.constant(Tensor({batch, fwd.w_hh.shape()[0]}));
  for (std::size_t t = 0; t < T; ++t) {
    h = step(sequence[t], h, fwd, t);
    out.forward.push_back(h);
  }
  h = tape.constant(Tensor({batch, bwd.w_hh.shape()[0]}));
  for (std::size_t t = T; t-- > 0;) {
    h = step(sequence[t], h, bwd, t);
    out.backward[t] = h;
  }
  return out;
}

}  // namespace lmcl

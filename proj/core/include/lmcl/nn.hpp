#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lmcl/ops.hpp"
#include "lmcl/params.hpp"

namespace lmcl {

/// x W + b with W [in,out], b [1,out].
Var dense(Var x, Var w, Var b);

/// Two-layer feed-forward block: out = (relu(x W1 + b1)) W2 + b2.
/// The caller applies whatever output squashing the head needs.
struct FeedForward2 {
  std::string prefix;
  std::size_t in = 0;
  std::size_t hidden = 0;
  std::size_t out = 0;

  void init(ParamStore& store, Rng& rng) const;
  [[nodiscard]] Var forward(Tape& tape, const ParamStore& store, Var x) const;
  /// Post-ReLU hidden activations only.
  [[nodiscard]] Var hidden_layer(Tape& tape, const ParamStore& store, Var x) const;
};

/// Gate weights for one recurrent direction. Gates are packed [reset | update | candidate].
struct GruWeights {
  Var w_ih;  // [in, 3H]
  Var w_hh;  // [H, 3H]
  Var b_ih;  // [1, 3H]
  Var b_hh;  // [1, 3H]
};

void add_gru_params(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden, Rng& rng);
GruWeights bind_gru(Tape& tape, const ParamStore& store, const std::string& prefix);

/// r = s(x Wr + h Ur), z = s(x Wz + h Uz), n = tanh(x Wn + r * (h Un)),
/// h' = (1 - z) * n + z * h   (biases folded into each affine term).
Var gru_cell(Var x, Var h_prev, const GruWeights& w);

struct BiGruStates {
  std::vector<Var> forward;   // forward[t]: state after reading elements 0..t
  std::vector<Var> backward;  // backward[t]: state after reading elements T-1..t
};

/// Runs both directions over `sequence` (each element [B,in]) from zero initial
/// state. Optional `masks` (one [B,H] 0/1 tensor per step) freeze the state of
/// rows whose sequence has ended, so right-padded batches of unequal length
/// give the same final states as unpadded runs.
BiGruStates bigru(std::span<const Var> sequence, const GruWeights& fwd, const GruWeights& bwd,
                  std::span<const Var> masks = {});

}  // namespace lmcl

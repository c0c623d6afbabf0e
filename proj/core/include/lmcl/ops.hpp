#pragma once

#include <cstddef>
#include <span>

#include "lmcl/tape.hpp"

namespace lmcl {

// Differentiable primitives. Every primitive records itself on the tape of its
// first operand and throws ShapeError (naming itself and the operand shapes)
// when shapes do not conform.
//
// Binary elementwise ops accept equal shapes, or a rank-2 `b` of shape [1,N]
// broadcast across the rows of a rank-2 `a` of shape [B,N].

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double k);
Var add_scalar(Var a, double k);

/// [M,K] x [K,N] -> [M,N]
Var matmul(Var a, Var b);

Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var abs(Var a);
Var exp(Var a);
Var log(Var a);
Var softplus(Var a);
/// max(a, lo); the gradient is zero where the floor is active.
Var clamp_min(Var a, double lo);

Var concat(Var a, Var b, std::size_t axis);
Var concat(std::span<const Var> parts, std::size_t axis);
/// Elements [begin, end) along `axis`.
Var slice(Var a, std::size_t begin, std::size_t end, std::size_t axis);
Var reshape(Var a, Shape shape);
/// Rows of a rank-2 tensor, in the given order (repeats allowed).
Var gather_rows(Var a, std::span<const std::size_t> rows);
/// out[b,0] = a[b, cols[b]] for rank-2 `a`.
Var pick(Var a, std::span<const std::size_t> cols);

/// Sum of all elements -> shape {1}.
Var sum(Var a);
/// Sum along `axis`, removing it (a rank-1 result keeps shape {1}).
Var sum(Var a, std::size_t axis);
/// Mean of all elements -> shape {1}.
Var mean(Var a);

Var softmax(Var a, std::size_t axis);
Var log_softmax(Var a, std::size_t axis);

/// input [B,Cin,H,W], kernels [Cout,Cin,kh,kw] with odd kh, kw.
/// Stride 1, zero "same" padding -> [B,Cout,H,W].
Var conv2d(Var input, Var kernels);
/// Adds bias [C] to every spatial cell of channel C in [B,C,H,W].
Var channel_bias(Var input, Var bias);
/// 2x2 average pooling on [B,C,H,W] with even H, W.
Var avg_pool2(Var input);

}  // namespace lmcl

#include "lmcl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lmcl {

namespace {

enum class Broadcast { none, rows };

Broadcast broadcast_kind(std::string_view op, const Shape& a, const Shape& b) {
  if (a == b) return Broadcast::none;
  if (a.size() == 2 && b.size() == 2 && b[0] == 1 && a[1] == b[1]) return Broadcast::rows;
  throw ShapeError(op, a, b);
}

void same_tape(std::string_view op, Var a, Var b) {
  if (&a.tape() != &b.tape()) throw ShapeError(op, "operands recorded on different tapes");
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(std::string_view op, const Shape& s, std::size_t axis) {
  if (axis >= s.size()) throw ShapeError(op, "axis " + std::to_string(axis) + " out of range for " + to_string(s));
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

template <typename F, typename DF>
Var unary(Var a, F f, DF df) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const auto ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia, df](Tape& t, std::size_t self) {
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(self);
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g[i] * df(x[i], y[i]);
  });
}

enum class BinOp { add, sub, mul };

Var binary(std::string_view name, BinOp op, Var a, Var b) {
  same_tape(name, a, b);
  const Tensor& x = a.value();
  const Tensor& z = b.value();
  const auto kind = broadcast_kind(name, x.shape(), z.shape());
  const std::size_t cols = z.size();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double bv = kind == Broadcast::rows ? z[i % cols] : z[i];
    switch (op) {
      case BinOp::add: y[i] = x[i] + bv; break;
      case BinOp::sub: y[i] = x[i] - bv; break;
      case BinOp::mul: y[i] = x[i] * bv; break;
    }
  }
  const auto ia = a.id();
  const auto ib = b.id();
  return a.tape().record(std::move(y), {ia, ib}, [ia, ib, op, kind, cols](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const bool need_a = t.requires_grad(ia);
    const bool need_b = t.requires_grad(ib);
    const Tensor& x = t.value(ia);
    const Tensor& z = t.value(ib);
    if (need_a) {
      Tensor& gx = t.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double bv = kind == Broadcast::rows ? z[i % cols] : z[i];
        gx[i] += op == BinOp::mul ? g[i] * bv : g[i];
      }
    }
    if (need_b) {
      Tensor& gz = t.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t j = kind == Broadcast::rows ? i % cols : i;
        switch (op) {
          case BinOp::add: gz[j] += g[i]; break;
          case BinOp::sub: gz[j] -= g[i]; break;
          case BinOp::mul: gz[j] += g[i] * x[i]; break;
        }
      }
    }
  });
}

double stable_sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Var add(Var a, Var b) { return binary("add", BinOp::add, a, b); }
Var sub(Var a, Var b) { return binary("sub", BinOp::sub, a, b); }
Var mul(Var a, Var b) { return binary("mul", BinOp::mul, a, b); }

Var scale(Var a, double k) {
  return unary(a, [k](double v) { return k * v; }, [k](double, double) { return k; });
}

Var add_scalar(Var a, double k) {
  return unary(a, [k](double v) { return v + k; }, [](double, double) { return 1.0; });
}

Var matmul(Var a, Var b) {
  same_tape("matmul", a, b);
  const Tensor& x = a.value();
  const Tensor& z = b.value();
  if (x.rank() != 2 || z.rank() != 2 || x.dim(1) != z.dim(0)) throw ShapeError("matmul", x.shape(), z.shape());
  const std::size_t m = x.dim(0), k = x.dim(1), n = z.dim(1);
  Tensor y({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* yr = &y[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = x[i * k + p];
      if (xv == 0.0) continue;
      const double* zr = &z[p * n];
      for (std::size_t j = 0; j < n; ++j) yr[j] += xv * zr[j];
    }
  }
  const auto ia = a.id();
  const auto ib = b.id();
  return a.tape().record(std::move(y), {ia, ib}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    const Tensor& z = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor& gx = t.grad(ia);
      for (std::size_t i = 0; i < m; ++i) {
        const double* gr = &g[i * n];
        for (std::size_t p = 0; p < k; ++p) {
          const double* zr = &z[p * n];
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += gr[j] * zr[j];
          gx[i * k + p] += acc;
        }
      }
    }
    if (t.requires_grad(ib)) {
      Tensor& gz = t.grad(ib);
      for (std::size_t i = 0; i < m; ++i) {
        const double* gr = &g[i * n];
        for (std::size_t p = 0; p < k; ++p) {
          const double xv = x[i * k + p];
          if (xv == 0.0) continue;
          double* gzr = &gz[p * n];
          for (std::size_t j = 0; j < n; ++j) gzr[j] += xv * gr[j];
        }
      }
    }
  });
}

Var relu(Var a) {
  return unary(a, [](double v) { return v > 0 ? v : 0.0; }, [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary(a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(a, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var abs(Var a) {
  return unary(a, [](double v) { return std::abs(v); },
               [](double v, double) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

Var exp(Var a) {
  return unary(a, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var softplus(Var a) {
  return unary(
      a, [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
      [](double v, double) { return stable_sigmoid(v); });
}

Var clamp_min(Var a, double lo) {
  return unary(a, [lo](double v) { return v < lo ? lo : v; }, [lo](double v, double) { return v < lo ? 0.0 : 1.0; });
}

Var concat(Var a, Var b, std::size_t axis) {
  const Var parts[] = {a, b};
  return concat(std::span<const Var>(parts), axis);
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat", "no operands");
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.size()) throw ShapeError("concat", "axis out of range for " + to_string(s0));
  Shape out_shape = s0;
  out_shape[axis] = 0;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    same_tape("concat", parts[0], p);
    const Shape& s = p.shape();
    if (s.size() != s0.size()) throw ShapeError("concat", s0, s);
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != axis && s[d] != s0[d]) throw ShapeError("concat", s0, s);
    }
    out_shape[axis] += s[axis];
    ids.push_back(p.id());
    widths.push_back(s[axis]);
  }
  const auto split = split_axis("concat", out_shape, axis);
  Tensor y(out_shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& x = parts[k].value();
    const std::size_t w = widths[k];
    for (std::size_t o = 0; o < split.outer; ++o) {
      std::copy_n(&x[o * w * split.inner], w * split.inner, &y[(o * split.n + offset) * split.inner]);
    }
    offset += w;
  }
  return parts[0].tape().record(std::move(y), ids, [ids, widths, split](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const std::size_t w = widths[k];
      if (t.requires_grad(ids[k])) {
        Tensor& gx = t.grad(ids[k]);
        for (std::size_t o = 0; o < split.outer; ++o) {
          const double* src = &g[(o * split.n + offset) * split.inner];
          double* dst = &gx[o * w * split.inner];
          for (std::size_t i = 0; i < w * split.inner; ++i) dst[i] += src[i];
        }
      }
      offset += w;
    }
  });
}

Var slice(Var a, std::size_t begin, std::size_t end, std::size_t axis) {
  const Shape& s = a.shape();
  const auto split = split_axis("slice", s, axis);
  if (begin >= end || end > split.n) {
    throw ShapeError("slice", "range [" + std::to_string(begin) + "," + std::to_string(end) + ") invalid for axis " +
                                  std::to_string(axis) + " of " + to_string(s));
  }
  Shape out_shape = s;
  out_shape[axis] = end - begin;
  const std::size_t w = end - begin;
  const Tensor& x = a.value();
  Tensor y(out_shape);
  for (std::size_t o = 0; o < split.outer; ++o) {
    std::copy_n(&x[(o * split.n + begin) * split.inner], w * split.inner, &y[o * w * split.inner]);
  }
  const auto ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia, split, begin, w](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t o = 0; o < split.outer; ++o) {
      const double* src = &g[o * w * split.inner];
      double* dst = &gx[(o * split.n + begin) * split.inner];
      for (std::size_t i = 0; i < w * split.inner; ++i) dst[i] += src[i];
    }
  });
}

Var reshape(Var a, Shape shape) {
  Tensor y = [&] {
    try {
      return a.value().reshaped(shape);
    } catch (const ShapeError&) {
      throw ShapeError("reshape", a.shape(), shape);
    }
  }();
  const auto ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var gather_rows(Var a, std::span<const std::size_t> rows) {
  const Shape& s = a.shape();
  if (s.size() != 2 || rows.empty()) throw ShapeError("gather_rows", s);
  const std::size_t n = s[1];
  for (auto r : rows) {
    if (r >= s[0]) throw ShapeError("gather_rows", "row " + std::to_string(r) + " out of range for " + to_string(s));
  }
  const Tensor& x = a.value();
  Tensor y({rows.size(), n});
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy_n(&x[rows[i] * n], n, &y[i * n]);
  const auto ia = a.id();
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return a.tape().record(std::move(y), {ia}, [ia, idx = std::move(idx), n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t j = 0; j < n; ++j) gx[idx[i] * n + j] += g[i * n + j];
    }
  });
}

Var pick(Var a, std::span<const std::size_t> cols) {
  const Shape& s = a.shape();
  if (s.size() != 2 || cols.size() != s[0]) {
    throw ShapeError("pick", s, Shape{cols.size()});
  }
  const std::size_t n = s[1];
  for (auto c : cols) {
    if (c >= n) throw ShapeError("pick", "column " + std::to_string(c) + " out of range for " + to_string(s));
  }
  const Tensor& x = a.value();
  Tensor y({s[0], 1});
  for (std::size_t i = 0; i < cols.size(); ++i) y[i] = x[i * n + cols[i]];
  const auto ia = a.id();
  std::vector<std::size_t> idx(cols.begin(), cols.end());
  return a.tape().record(std::move(y), {ia}, [ia, idx = std::move(idx), n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t i = 0; i < idx.size(); ++i) gx[i * n + idx[i]] += g[i];
  });
}

Var sum(Var a) {
  const Tensor& x = a.value();
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  const auto ia = a.id();
  return a.tape().record(Tensor::scalar(acc), {ia}, [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    Tensor& gx = t.grad(ia);
    for (auto& v : gx.data()) v += g;
  });
}

Var sum(Var a, std::size_t axis) {
  const Shape& s = a.shape();
  const auto split = split_axis("sum", s, axis);
  Shape out_shape;
  for (std::size_t d = 0; d < s.size(); ++d) {
    if (d != axis) out_shape.push_back(s[d]);
  }
  if (out_shape.empty()) out_shape.push_back(1);
  const Tensor& x = a.value();
  Tensor y(out_shape);
  for (std::size_t o = 0; o < split.outer; ++o) {
    for (std::size_t k = 0; k < split.n; ++k) {
      const double* src = &x[(o * split.n + k) * split.inner];
      double* dst = &y[o * split.inner];
      for (std::size_t i = 0; i < split.inner; ++i) dst[i] += src[i];
    }
  }
  const auto ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia, split](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t o = 0; o < split.outer; ++o) {
      for (std::size_t k = 0; k < split.n; ++k) {
        double* dst = &gx[(o * split.n + k) * split.inner];
        const double* src = &g[o * split.inner];
        for (std::size_t i = 0; i < split.inner; ++i) dst[i] += src[i];
      }
    }
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

namespace {

Var softmax_impl(std::string_view name, Var a, std::size_t axis, bool take_log) {
  const Shape& s = a.shape();
  const auto split = split_axis(name, s, axis);
  const Tensor& x = a.value();
  Tensor y(s);
  for (std::size_t o = 0; o < split.outer; ++o) {
    for (std::size_t i = 0; i < split.inner; ++i) {
      auto at = [&](std::size_t k) { return (o * split.n + k) * split.inner + i; };
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < split.n; ++k) mx = std::max(mx, x[at(k)]);
      double z = 0.0;
      for (std::size_t k = 0; k < split.n; ++k) z += std::exp(x[at(k)] - mx);
      const double lz = std::log(z);
      for (std::size_t k = 0; k < split.n; ++k) {
        const double ls = x[at(k)] - mx - lz;
        y[at(k)] = take_log ? ls : std::exp(ls);
      }
    }
  }
  const auto ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia, split, take_log](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t o = 0; o < split.outer; ++o) {
      for (std::size_t i = 0; i < split.inner; ++i) {
        auto at = [&](std::size_t k) { return (o * split.n + k) * split.inner + i; };
        if (take_log) {
          double gs = 0.0;
          for (std::size_t k = 0; k < split.n; ++k) gs += g[at(k)];
          for (std::size_t k = 0; k < split.n; ++k) gx[at(k)] += g[at(k)] - std::exp(y[at(k)]) * gs;
        } else {
          double dot = 0.0;
          for (std::size_t k = 0; k < split.n; ++k) dot += g[at(k)] * y[at(k)];
          for (std::size_t k = 0; k < split.n; ++k) gx[at(k)] += y[at(k)] * (g[at(k)] - dot);
        }
      }
    }
  });
}

}  // namespace

Var softmax(Var a, std::size_t axis) { return softmax_impl("softmax", a, axis, false); }
Var log_softmax(Var a, std::size_t axis) { return softmax_impl("log_softmax", a, axis, true); }

Var conv2d(Var input, Var kernels) {
  same_tape("conv2d", input, kernels);
  const Shape& xs = input.shape();
  const Shape& ks = kernels.shape();
  if (xs.size() != 4 || ks.size() != 4 || xs[1] != ks[1] || ks[2] % 2 == 0 || ks[3] % 2 == 0) {
    throw ShapeError("conv2d", xs, ks);
  }
  const std::size_t batch = xs[0], cin = xs[1], h = xs[2], w = xs[3];
  const std::size_t cout = ks[0], kh = ks[2], kw = ks[3];
  const auto ph = static_cast<std::ptrdiff_t>(kh / 2);
  const auto pw = static_cast<std::ptrdiff_t>(kw / 2);
  const auto H = static_cast<std::ptrdiff_t>(h);
  const auto W = static_cast<std::ptrdiff_t>(w);

  // Visits every (output cell, input cell, kernel tap) triple with valid indices.
  auto for_each_tap = [=](auto&& fn) {
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t o = 0; o < cout; ++o)
        for (std::size_t c = 0; c < cin; ++c)
          for (std::size_t dy = 0; dy < kh; ++dy)
            for (std::size_t dx = 0; dx < kw; ++dx) {
              const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(dy) - ph;
              const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(dx) - pw;
              const std::size_t k_idx = ((o * cin + c) * kh + dy) * kw + dx;
              const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -oy);
              const std::ptrdiff_t y1 = std::min<std::ptrdiff_t>(H, H - oy);
              const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -ox);
              const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(W, W - ox);
              for (std::ptrdiff_t y = y0; y < y1; ++y) {
                const std::size_t out_row = ((b * cout + o) * h + static_cast<std::size_t>(y)) * w;
                const std::size_t in_row = ((b * cin + c) * h + static_cast<std::size_t>(y + oy)) * w;
                fn(out_row, in_row, k_idx, x0, x1, ox);
              }
            }
  };

  const Tensor& x = input.value();
  const Tensor& k = kernels.value();
  Tensor y({batch, cout, h, w});
  for_each_tap([&](std::size_t out_row, std::size_t in_row, std::size_t k_idx, std::ptrdiff_t x0, std::ptrdiff_t x1,
                   std::ptrdiff_t ox) {
    const double kv = k[k_idx];
    for (std::ptrdiff_t xx = x0; xx < x1; ++xx) {
      y[out_row + static_cast<std::size_t>(xx)] += kv * x[in_row + static_cast<std::size_t>(xx + ox)];
    }
  });

  const auto ix = input.id();
  const auto ik = kernels.id();
  return input.tape().record(std::move(y), {ix, ik}, [ix, ik, for_each_tap](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ix);
    const Tensor& k = t.value(ik);
    const bool need_x = t.requires_grad(ix);
    const bool need_k = t.requires_grad(ik);
    Tensor* gx = need_x ? &t.grad(ix) : nullptr;
    Tensor* gk = need_k ? &t.grad(ik) : nullptr;
    for_each_tap([&](std::size_t out_row, std::size_t in_row, std::size_t k_idx, std::ptrdiff_t x0, std::ptrdiff_t x1,
                     std::ptrdiff_t ox) {
      const double kv = k[k_idx];
      double acc = 0.0;
      for (std::ptrdiff_t xx = x0; xx < x1; ++xx) {
        const double gv = g[out_row + static_cast<std::size_t>(xx)];
        const std::size_t xi = in_row + static_cast<std::size_t>(xx + ox);
        if (gx) (*gx)[xi] += gv * kv;
        acc += gv * x[xi];
      }
      if (gk) (*gk)[k_idx] += acc;
    });
  });
}

Var channel_bias(Var input, Var bias) {
  same_tape("channel_bias", input, bias);
  const Shape& xs = input.shape();
  const Shape& bs = bias.shape();
  if (xs.size() != 4 || bias.value().size() != xs[1]) throw ShapeError("channel_bias", xs, bs);
  const std::size_t batch = xs[0], c = xs[1], plane = xs[2] * xs[3];
  Tensor y = input.value();
  const Tensor& b = bias.value();
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < plane; ++i) y[(n * c + ch) * plane + i] += b[ch];
  const auto ix = input.id();
  const auto ib = bias.id();
  return input.tape().record(std::move(y), {ix, ib}, [ix, ib, batch, c, plane](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ix)) t.grad(ix) += g;
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad(ib);
      for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t i = 0; i < plane; ++i) gb[ch] += g[(n * c + ch) * plane + i];
    }
  });
}

Var avg_pool2(Var input) {
  const Shape& xs = input.shape();
  if (xs.size() != 4 || xs[2] % 2 != 0 || xs[3] % 2 != 0) throw ShapeError("avg_pool2", xs);
  const std::size_t planes = xs[0] * xs[1], h = xs[2], w = xs[3], oh = h / 2, ow = w / 2;
  const Tensor& x = input.value();
  Tensor y({xs[0], xs[1], oh, ow});
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        const std::size_t base = p * h * w + 2 * i * w + 2 * j;
        y[(p * oh + i) * ow + j] = 0.25 * (x[base] + x[base + 1] + x[base + w] + x[base + w + 1]);
      }
  const auto ix = input.id();
  return input.tape().record(std::move(y), {ix}, [ix, planes, h, w, oh, ow](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ix);
    for (std::size_t p = 0; p < planes; ++p)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          const double gv = 0.25 * g[(p * oh + i) * ow + j];
          const std::size_t base = p * h * w + 2 * i * w + 2 * j;
          gx[base] += gv;
          gx[base + 1] += gv;
          gx[base + w] += gv;
          gx[base + w + 1] += gv;
        }
  });
}

}  // namespace lmcl

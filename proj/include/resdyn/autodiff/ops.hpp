// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

// Differentiable kernels. Every op computes its forward value eagerly and records a
// closure that maps the output adjoint onto its inputs' adjoints. Only the broadcasting
// patterns the residual networks need are supported: a trailing-shape operand may be
// tiled over the leading dimensions (add_broadcast, mul_broadcast).

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <memory>
#include <span>
#include <vector>

#include "resdyn/autodiff/tape.hpp"

namespace resdyn::ad {

namespace detail {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <class T>
void require_same_tape(Var<T> a, Var<T> b, const char* op) {
  if (a.tape != b.tape) throw TapeError(std::string(op) + ": operands on different tapes");
}

inline std::size_t leading(const Shape& s) { return s.empty() ? 1 : numel(s) / s.back(); }

/// True when `tail` equals the trailing dims of `full`.
inline bool is_trailing(const Shape& full, const Shape& tail) {
  if (tail.size() > full.size()) return false;
  return std::equal(tail.rbegin(), tail.rend(), full.rbegin());
}

template <class T>
bool any_grad(Tape<T>& t, std::initializer_list<Var<T>> vs) {
  for (auto v : vs) {
    if (t.requires_grad(v)) return true;
  }
  return false;
}

template <class T>
Var<T> unary(Var<T> x, std::vector<T> y, std::function<void(std::span<const T> x, std::span<const T> y,
                                                            std::span<const T> dy, std::span<T> dx)>
                                                  adjoint) {
  Tape<T>& t = *x.tape;
  const bool rg = t.requires_grad(x);
  const std::uint32_t xi = x.id;
  const std::uint32_t oi = static_cast<std::uint32_t>(t.size());
  return t.record(x.shape(), std::move(y), rg, [xi, oi, adjoint](Tape<T>& tp) {
    adjoint(tp.value(xi), tp.value(oi), tp.grad(oi), tp.grad(xi));
  });
}

}  // namespace detail

/// y = x W + b over the last axis of x. x: [..., in], W: [in, out], b: [out].
template <class T>
Var<T> linear(Var<T> x, Var<T> w, Var<T> b) {
  detail::require_same_tape(x, w, "linear");
  detail::require_same_tape(x, b, "linear");
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (xs.empty() || ws.size() != 2 || xs.back() != ws[0] || b.shape() != Shape{ws[1]}) {
    throw ShapeError("linear: x " + to_string(xs) + ", W " + to_string(ws) + ", b " + to_string(b.shape()));
  }
  Tape<T>& t = *x.tape;
  const std::size_t n = detail::leading(xs), in = ws[0], out = ws[1];
  Shape ys = xs;
  ys.back() = out;
  std::vector<T> y(n * out);
  {
    detail::ConstMatMap<T> X(x.value().data(), n, in);
    detail::ConstMatMap<T> W(w.value().data(), in, out);
    detail::MatMap<T> Y(y.data(), n, out);
    Y.noalias() = X * W;
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> B(b.value().data(), out);
    Y.rowwise() += B;
  }
  const bool rg = detail::any_grad(t, {x, w, b});
  const auto xi = x.id, wi = w.id, bi = b.id;
  const auto oi = static_cast<std::uint32_t>(t.size());
  return t.record(std::move(ys), std::move(y), rg, [=](Tape<T>& tp) {
    detail::ConstMatMap<T> dY(tp.grad(oi).data(), n, out);
    if (tp.requires_grad(xi)) {
      detail::MatMap<T> dX(tp.grad(xi).data(), n, in);
      detail::ConstMatMap<T> W(tp.value(wi).data(), in, out);
      dX.noalias() += dY * W.transpose();
    }
    if (tp.requires_grad(wi)) {
      detail::MatMap<T> dW(tp.grad(wi).data(), in, out);
      detail::ConstMatMap<T> X(tp.value(xi).data(), n, in);
      dW.noalias() += X.transpose() * dY;
    }
    if (tp.requires_grad(bi)) {
      Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> dB(tp.grad(bi).data(), out);
      // Row by row rather than colwise().sum(): the vectorized partial reduction sums in an
      // order that depends on buffer alignment, which would make training non-reproducible.
      for (Eigen::Index r = 0; r < dY.rows(); ++r) dB += dY.row(r);
    }
  });
}

template <class T>
Var<T> add(Var<T> x, Var<T> y) {
  detail::require_same_tape(x, y, "add");
  if (x.shape() != y.shape()) throw ShapeError("add: " + to_string(x.shape()) + " vs " + to_string(y.shape()));
  Tape<T>& t = *x.tape;
  std::vector<T> out(x.value());
  const auto& yv = y.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += yv[i];
  const auto xi = x.id, yi = y.id;
  const auto oi = static_cast<std::uint32_t>(t.size());
  return t.record(x.shape(), std::move(out), detail::any_grad(t, {x, y}), [=](Tape<T>& tp) {
    const auto& g = tp.grad(oi);
    for (auto id : {xi, yi}) {
      if (!tp.requires_grad(id)) continue;
      auto& d = tp.grad(id);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
  });
}

template <class T>
Var<T> sub(Var<T> x, Var<T> y) {
  detail::require_same_tape(x, y, "sub");
  if (x.shape() != y.shape()) throw ShapeError("sub: " + to_string(x.shape()) + " vs " + to_string(y.shape()));
  Tape<T>& t = *x.tape;
  std::vector<T> out(x.value());
  const auto& yv = y.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= yv[i];
  const auto xi = x.id, yi = y.id;
  const auto oi = static_cast<std::uint32_t>(t.size());
  return t.record(x.shape(), std::move(out), detail::any_grad(t, {x, y}), [=](Tape<T>& tp) {
    const auto& g = tp.grad(oi);
    if (tp.requires_grad(xi)) {
      auto& d = tp.grad(xi);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (tp.requires_grad(yi)) {
      auto& d = tp.grad(yi);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] -= g[i];
    }
  });
}

/// Elementwise product of equal shapes.
template <class T>
Var<T> mul(Var<T> x, Var<T> y) {
  detail::require_same_tape(x, y, "mul");
  if (x.shape() != y.shape()) throw ShapeError("mul: " + to_string(x.shape()) + " vs " + to_string(y.shape()));
  Tape<T>& t = *x.tape;
  std::vector<T> out(x.value());
  const auto& yv = y.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= yv[i];
  const auto xi = x.id, yi = y.id;
  const auto oi = static_cast<std::uint32_t>(t.size());
  return t.record(x.shape(), std::move(out), detail::any_grad(t, {x, y}), [=](Tape<T>& tp) {
    const auto& g = tp.grad(oi);
    const auto& xv = tp.value(xi);
    const auto& yv2 = tp.value(yi);
    if (tp.requires_grad(xi)) {
      auto& d = tp.grad(xi);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * yv2[i];
    }
    if (tp.requires_grad(yi)) {
      auto& d = tp.grad(yi);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * xv[i];
    }
  });
}

/// x + y where y's shape equals the trailing dims of x (y tiled over the rest).
template <class T>
Var<T> add_broadcast(Var<T> x, Var<T> y) {
  detail::require_same_tape(x, y, "add_broadcast");
  if (!detail::is_trailing(x.shape(), y.shape()) || y.size() == 0) {
    throw ShapeError("add_broadcast: " + to_string(y.shape()) + " is not a suffix of " + to_string(x.shape()));
  }
  Tape<T>& t = *x.tape;
  const std::size_t block = y.size();
  std::vector<T> out(x.value());
  const auto& yv = y.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += yv[i % block];
  const auto xi = x.id, yi = y.id;
  const auto oi = static_cast<std::uint32_t>(t.size());
  return t.record(x.shape(), std::move(out), detail::any_grad(t, {x, y}), [=](Tape<T>& tp) {
    const auto& g = tp.grad(oi);
    if (tp.requires_grad(xi)) {
      auto& d = tp.grad(xi);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (tp.requires_grad(yi)) {
      auto& d = tp.grad(yi);
      for (std::size_t i = 0; i < g.size(); ++i) d[i % block] += g[i];
    }
  });
}

/// x * y where y's shape equals the trailing dims of x.
template <class T>
Var<T> mul_broadcast(Var<T> x, Var<T> y) {
  detail::require_same_tape(x, y, "mul_broadcast");
  if (!detail::is_trailing(x.shape(), y.shape()) || y.size() == 0) {
    throw ShapeError("mul_broadcast: " + to_string(y.shape()) + " is not a suffix of " + to_string(x.shape()));
  }
  Tape<T>& t = *x.tape;
  const std::size_t block = y.size();
  std::vector<T> out(x.value());
  const auto& yv = y.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= yv[i % block];
  const auto xi = x.id, yi = y.id;
  const auto oi = static_cast<std::uint32_t>(t.size());
  return t.record(x.shape(), std::move(out), detail::any_grad(t, {x, y}), [=](Tape<T>& tp) {
    const auto& g = tp.grad(oi);
    const auto& xv = tp.value(xi);
    const auto& yv2 = tp.value(yi);
    if (tp.requires_grad(xi)) {
      auto& d = tp.grad(xi);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * yv2[i % block];
    }
    if (tp.requires_grad(yi)) {
      auto& d = tp.grad(yi);
      for (std::size_t i = 0; i < g.size(); ++i) d[i % block] += g[i] * xv[i];
    }
  });
}

template <class T>
Var<T> relu(Var<T> x) {
  std::vector<T> y(x.value());
  for (auto& v : y) v = v > T{0} ? v : T{0};
  return detail::unary<T>(x, std::move(y), [](auto xv, auto, auto dy, auto dx) {
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += xv[i] > T{0} ? dy[i] : T{0};
  });
}

/// tanh approximation of GELU.
template <class T>
Var<T> gelu(Var<T> x) {
  constexpr T k = T(0.7978845608028654);  // sqrt(2/pi)
  constexpr T c = T(0.044715);
  std::vector<T> y(x.value());
  for (auto& v : y) v = T(0.5) * v * (T(1) + std::tanh(k * (v + c * v * v * v)));
  return detail::unary<T>(x, std::move(y), [](auto xv, auto, auto dy, auto dx) {
    for (std::size_t i = 0; i < dy.size(); ++i) {
      const T v = xv[i];
      const T th = std::tanh(k * (v + c * v * v * v));
      const T d = T(0.5) * (T(1) + th) + T(0.5) * v * (T(1) - th * th) * k * (T(1) + T(3) * c * v * v);
      dx[i] += dy[i] * d;
    }
  });
}

/// Softmax over the last axis, max-subtracted.
template <class T>
Var<T> softmax(Var<T> x) {
  const Shape& s = x.shape();
  if (s.empty() || s.back() == 0) throw ShapeError("softmax: empty last axis");
  const std::size_t n = s.back(), rows = detail::leading(s);
  std::vector<T> y(x.value());
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = y.data() + r * n;
    const T mx = *std::max_element(row, row + n);
    T sum{0};
    for (std::size_t j = 0; j < n; ++j) sum += (row[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
  }
  return detail::unary<T>(x, std::move(y), [n, rows](auto, auto yv, auto dy, auto dx) {
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t o = r * n;
      T dot{0};
      for (std::size_t j = 0; j < n; ++j) dot += yv[o + j] * dy[o + j];
      for (std::size_t j = 0; j < n; ++j) dx[o + j] += yv[o + j] * (dy[o + j] - dot);
    }
  });
}

/// Scaled dot-product attention, softmax(q k^T / sqrt(d_head)) v, per batch and head.
/// q: [B, Nq, d] (or [Nq, d]), k and v: [B, Nk, d]; d is split into `heads` contiguous slices.
template <class T>
Var<T> attention(Var<T> q, Var<T> k, Var<T> v, std::size_t heads = 1) {
  detail::require_same_tape(q, k, "attention");
  detail::require_same_tape(q, v, "attention");
  const Shape qs = q.shape(), ks = k.shape(), vs = v.shape();
  const bool batched = qs.size() == 3;
  if ((qs.size() != 2 && qs.size() != 3) || ks.size() != qs.size() || vs != ks || qs.back() != ks.back() ||
      (batched && qs[0] != ks[0])) {
    throw ShapeError("attention: q " + to_string(qs) + ", k " + to_string(ks) + ", v " + to_string(vs));
  }
  const std::size_t d = qs.back();
  if (heads == 0 || d % heads != 0) throw ShapeError("attention: d=" + std::to_string(d) + " not divisible by heads");
  const std::size_t batch = batched ? qs[0] : 1;
  const std::size_t nq = qs[qs.size() - 2], nk = ks[ks.size() - 2];
  const std::size_t dh = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  Tape<T>& t = *q.tape;

  const auto& Q = q.value();
  const auto& K = k.value();
  const auto& V = v.value();
  std::vector<T> out(batch * nq * d, T{0});
  auto probs = std::make_shared<std::vector<T>>(batch * heads * nq * nk);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < nq; ++i) {
        const T* qi = Q.data() + (b * nq + i) * d + h * dh;
        T* p = probs->data() + ((b * heads + h) * nq + i) * nk;
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < nk; ++j) {
          const T* kj = K.data() + (b * nk + j) * d + h * dh;
          T s{0};
          for (std::size_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
          p[j] = s * scale;
          mx = std::max(mx, p[j]);
        }
        T sum{0};
        for (std::size_t j = 0; j < nk; ++j) sum += (p[j] = std::exp(p[j] - mx));
        T* oi = out.data() + (b * nq + i) * d + h * dh;
        for (std::size_t j = 0; j < nk; ++j) {
          p[j] /= sum;
          const T* vj = V.data() + (b * nk + j) * d + h * dh;
          for (std::size_t c = 0; c < dh; ++c) oi[c] += p[j] * vj[c];
        }
      }
    }
  }

  const auto qi_ = q.id, ki_ = k.id, vi_ = v.id;
  const auto oid = static_cast<std::uint32_t>(t.size());
  return t.record(qs, std::move(out), detail::any_grad(t, {q, k, v}), [=](Tape<T>& tp) {
    const auto& dO = tp.grad(oid);
    const auto& Qv = tp.value(qi_);
    const auto& Kv = tp.value(ki_);
    const auto& Vv = tp.value(vi_);
    const bool gq = tp.requires_grad(qi_), gk = tp.requires_grad(ki_), gv = tp.requires_grad(vi_);
    T* dQ = gq ? tp.grad(qi_).data() : nullptr;
    T* dK = gk ? tp.grad(ki_).data() : nullptr;
    T* dV = gv ? tp.grad(vi_).data() : nullptr;
    std::vector<T> dp(nk);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < nq; ++i) {
          const T* p = probs->data() + ((b * heads + h) * nq + i) * nk;
          const T* doi = dO.data() + (b * nq + i) * d + h * dh;
          T dot{0};
          for (std::size_t j = 0; j < nk; ++j) {
            const std::size_t vo = (b * nk + j) * d + h * dh;
            T s{0};
            for (std::size_t c = 0; c < dh; ++c) s += doi[c] * Vv[vo + c];
            dp[j] = s;
            dot += p[j] * s;
            if (gv) {
              for (std::size_t c = 0; c < dh; ++c) dV[vo + c] += p[j] * doi[c];
            }
          }
          const std::size_t qo = (b * nq + i) * d + h * dh;
          for (std::size_t j = 0; j < nk; ++j) {
            const T ds = p[j] * (dp[j] - dot) * scale;
            const std::size_t ko = (b * nk + j) * d + h * dh;
            if (gq) {
              for (std::size_t c = 0; c < dh; ++c) dQ[qo + c] += ds * Kv[ko + c];
            }
            if (gk) {
              for (std::size_t c = 0; c < dh; ++c) dK[ko + c] += ds * Qv[qo + c];
            }
          }
        }
      }
    }
  });
}

/// Per-row normalization over the last axis, then gamma * xhat + beta.
template <class T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps = T(1e-5)) {
  detail::require_same_tape(x, gamma, "layer_norm");
  detail::require_same_tape(x, beta, "layer_norm");
  const Shape& s = x.shape();
  if (s.empty() || s.back() == 0 || gamma.shape() != Shape{s.back()} || beta.shape() != Shape{s.back()}) {
    throw ShapeError("layer_norm: x " + to_string(s) + ", gamma " + to_string(gamma.shape()));
  }
  const std::size_t d = s.back(), rows = detail::leading(s);
  Tape<T>& t = *x.tape;
  const auto& xv = x.value();
  const auto& g = gamma.value();
  const auto& bt = beta.value();
  auto xhat = std::make_shared<std::vector<T>>(xv.size());
  auto inv_std = std::make_shared<std::vector<T>>(rows);
  std::vector<T> y(xv.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = xv.data() + r * d;
    T mean{0};
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<T>(d);
    T var{0};
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<T>(d);
    const T is = T(1) / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const T xh = (xr[j] - mean) * is;
      (*xhat)[r * d + j] = xh;
      y[r * d + j] = g[j] * xh + bt[j];
    }
  }
  const auto xi = x.id, gi = gamma.id, bi = beta.id;
  const auto oi = static_cast<std::uint32_t>(t.size());
  return t.record(s, std::move(y), detail::any_grad(t, {x, gamma, beta}), [=](Tape<T>& tp) {
    const auto& dy = tp.grad(oi);
    const auto& gv = tp.value(gi);
    const bool gx = tp.requires_grad(xi), gg = tp.requires_grad(gi), gb = tp.requires_grad(bi);
    T* dx = gx ? tp.grad(xi).data() : nullptr;
    T* dg = gg ? tp.grad(gi).data() : nullptr;
    T* db = gb ? tp.grad(bi).data() : nullptr;
    for (std::size_t r = 0; r < rows; ++r) {
      const T* dyr = dy.data() + r * d;
      const T* xh = xhat->data() + r * d;
      T m1{0}, m2{0};
      for (std::size_t j = 0; j < d; ++j) {
        const T dxh = dyr[j] * gv[j];
        m1 += dxh;
        m2 += dxh * xh[j];
        if (gg) dg[j] += dyr[j] * xh[j];
        if (gb) db[j] += dyr[j];
      }
      if (gx) {
        m1 /= static_cast<T>(d);
        m2 /= static_cast<T>(d);
        const T is = (*inv_std)[r];
        for (std::size_t j = 0; j < d; ++j) dx[r * d + j] += is * (dyr[j] * gv[j] - m1 - xh[j] * m2);
      }
    }
  });
}

/// Concatenation along `axis`; all other dims must agree.
template <class T>
Var<T> concat(const std::vector<Var<T>>& xs, std::size_t axis) {
  if (xs.empty()) throw ShapeError("concat: no inputs");
  const Shape& s0 = xs[0].shape();
  if (axis >= s0.size()) throw ShapeError("concat: axis out of range for " + to_string(s0));
  Tape<T>& t = *xs[0].tape;
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s0[i];
  for (std::size_t i = axis + 1; i < s0.size(); ++i) inner *= s0[i];
  Shape out_shape = s0;
  out_shape[axis] = 0;
  std::vector<std::size_t> widths;
  std::vector<std::uint32_t> ids;
  bool rg = false;
  for (const auto& x : xs) {
    detail::require_same_tape(xs[0], x, "concat");
    const Shape& s = x.shape();
    bool ok = s.size() == s0.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == s0[i];
    if (!ok) throw ShapeError("concat: " + to_string(s) + " incompatible with " + to_string(s0));
    widths.push_back(s[axis] * inner);
    ids.push_back(x.id);
    out_shape[axis] += s[axis];
    rg = rg || t.requires_grad(x);
  }
  const std::size_t row = out_shape[axis] * inner;
  std::vector<T> y(outer * row);
  for (std::size_t o = 0, off = 0; o < xs.size(); off += widths[o], ++o) {
    const auto& v = xs[o].value();
    for (std::size_t r = 0; r < outer; ++r) {
      std::copy_n(v.data() + r * widths[o], widths[o], y.data() + r * row + off);
    }
  }
  const auto oi = static_cast<std::uint32_t>(t.size());
  return t.record(std::move(out_shape), std::move(y), rg, [=](Tape<T>& tp) {
    const auto& g = tp.grad(oi);
    for (std::size_t o = 0, off = 0; o < ids.size(); off += widths[o], ++o) {
      if (!tp.requires_grad(ids[o])) continue;
      auto& d = tp.grad(ids[o]);
      for (std::size_t r = 0; r < outer; ++r) {
        for (std::size_t c = 0; c < widths[o]; ++c) d[r * widths[o] + c] += g[r * row + off + c];
      }
    }
  });
}

/// Mean over one axis; that axis is removed from the shape.
template <class T>
Var<T> mean(Var<T> x, std::size_t axis) {
  const Shape& s = x.shape();
  if (axis >= s.size() || s[axis] == 0) throw ShapeError("mean: bad axis for " + to_string(s));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t n = s[axis];
  Shape out_shape;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != axis) out_shape.push_back(s[i]);
  }
  if (out_shape.empty()) out_shape.push_back(1);
  const auto& xv = x.value();
  std::vector<T> y(outer * inner, T{0});
  const T inv = T(1) / static_cast<T>(n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t i = 0; i < inner; ++i) y[o * inner + i] += xv[(o * n + a) * inner + i];
    }
  }
  for (auto& v : y) v *= inv;
  Tape<T>& t = *x.tape;
  const auto xi = x.id;
  const auto oi = static_cast<std::uint32_t>(t.size());
  return t.record(std::move(out_shape), std::move(y), t.requires_grad(x), [=](Tape<T>& tp) {
    const auto& g = tp.grad(oi);
    auto& d = tp.grad(xi);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t i = 0; i < inner; ++i) d[(o * n + a) * inner + i] += g[o * inner + i] * inv;
      }
    }
  });
}

/// Sum of all elements, shape [1].
template <class T>
Var<T> sum(Var<T> x) {
  T acc{0};
  for (T v : x.value()) acc += v;
  Tape<T>& t = *x.tape;
  const auto xi = x.id;
  const auto oi = static_cast<std::uint32_t>(t.size());
  return t.record({1}, {acc}, t.requires_grad(x), [=](Tape<T>& tp) {
    const T g = tp.grad(oi)[0];
    for (auto& d : tp.grad(xi)) d += g;
  });
}

/// Multiplies by a compile-time-free scalar constant.
template <class T>
Var<T> scale(Var<T> x, T k) {
  std::vector<T> y(x.value());
  for (auto& v : y) v *= k;
  return detail::unary<T>(x, std::move(y), [k](auto, auto, auto dy, auto dx) {
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += k * dy[i];
  });
}

/// 0.5 x^2 / beta for |x| < beta, |x| - 0.5 beta otherwise. Elementwise.
template <class T>
T smooth_l1_value(T x, T beta) {
  const T ax = std::abs(x);
  return ax < beta ? T(0.5) * x * x / beta : ax - T(0.5) * beta;
}

template <class T>
Var<T> smooth_l1(Var<T> x, T beta = T(1)) {
  if (!(beta > T{0})) throw std::invalid_argument("smooth_l1: beta must be > 0");
  std::vector<T> y(x.value());
  for (auto& v : y) v = smooth_l1_value(v, beta);
  return detail::unary<T>(x, std::move(y), [beta](auto xv, auto, auto dy, auto dx) {
    for (std::size_t i = 0; i < dy.size(); ++i) {
      const T v = xv[i];
      const T d = std::abs(v) < beta ? v / beta : (v > T{0} ? T(1) : T(-1));
      dx[i] += dy[i] * d;
    }
  });
}

/// Same data viewed with a new shape of equal size.
template <class T>
Var<T> reshape(Var<T> x, Shape shape) {
  if (numel(shape) != x.size()) throw ShapeError("reshape: " + to_string(x.shape()) + " -> " + to_string(shape));
  Tape<T>& t = *x.tape;
  const auto xi = x.id;
  const auto oi = static_cast<std::uint32_t>(t.size());
  return t.record(std::move(shape), x.value(), t.requires_grad(x), [=](Tape<T>& tp) {
    const auto& g = tp.grad(oi);
    auto& d = tp.grad(xi);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
  });
}

/// Rows [begin, end) along axis `axis` (removing nothing).
template <class T>
Var<T> slice(Var<T> x, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& s = x.shape();
  if (axis >= s.size() || begin >= end || end > s[axis]) {
    throw ShapeError("slice: [" + std::to_string(begin) + ", " + std::to_string(end) + ") on " + to_string(s));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t n = s[axis], w = (end - begin) * inner;
  Shape out_shape = s;
  out_shape[axis] = end - begin;
  std::vector<T> y(outer * w);
  const auto& xv = x.value();
  for (std::size_t o = 0; o < outer; ++o) std::copy_n(xv.data() + (o * n + begin) * inner, w, y.data() + o * w);
  Tape<T>& t = *x.tape;
  const auto xi = x.id;
  const auto oi = static_cast<std::uint32_t>(t.size());
  return t.record(std::move(out_shape), std::move(y), t.requires_grad(x), [=](Tape<T>& tp) {
    const auto& g = tp.grad(oi);
    auto& d = tp.grad(xi);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t c = 0; c < w; ++c) d[(o * n + begin) * inner + c] += g[o * w + c];
    }
  });
}

}  // namespace resdyn::ad

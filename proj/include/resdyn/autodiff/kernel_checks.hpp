// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

// Finite-difference checks of every kernel on randomized shapes. Each kernel output is
// reduced to a scalar through a random weighting so no adjoint entry is trivially zero.

#pragma once

#include <string>
#include <vector>

#include "resdyn/autodiff/grad_check.hpp"
#include "resdyn/autodiff/ops.hpp"

namespace resdyn::ad {

struct KernelCheck {
  std::string kernel;
  GradCheckResult result;
};

namespace detail {

inline Tensor<double> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

/// Values bounded away from 0, for kernels with a kink there.
inline Tensor<double> off_zero_tensor(Shape shape, Rng& rng) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.data) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.1, 1.5);
  return t;
}

inline Var<double> weighted_sum(Var<double> y, std::uint64_t seed) {
  Rng rng = Rng::derived(seed, 0xa11);
  std::vector<double> w(y.size());
  for (auto& v : w) v = rng.uniform(-1.0, 1.0);
  return sum(mul(y, y.tape->constant(y.shape(), std::move(w))));
}

}  // namespace detail

inline std::vector<KernelCheck> check_all_kernels(std::uint64_t seed = 0, const GradCheckOptions& base_opt = {}) {
  Rng rng = Rng::derived(seed, 0xc4ec);
  GradCheckOptions opt = base_opt;
  opt.seed = seed;
  std::vector<KernelCheck> out;
  auto size = [&](std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng.below(hi - lo + 1)); };
  auto run = [&](const std::string& name, std::vector<Tensor<double>*> params, auto build) {
    LossFn fn = [&, build](Tape<double>& t) {
      std::vector<Var<double>> vs;
      for (auto* p : params) vs.push_back(t.param(*p));
      return detail::weighted_sum(build(t, vs), seed);
    };
    out.push_back({name, grad_check(fn, params, opt)});
  };

  const std::size_t b = size(2, 3), n = size(2, 5), in = size(2, 6), o = size(1, 5);
  {
    auto x = detail::random_tensor({b, n, in}, rng);
    auto w = detail::random_tensor({in, o}, rng);
    auto bias = detail::random_tensor({o}, rng);
    run("linear", {&x, &w, &bias}, [](Tape<double>&, auto& v) { return linear(v[0], v[1], v[2]); });
  }
  {
    auto x = detail::random_tensor({b, n}, rng);
    auto y = detail::random_tensor({b, n}, rng);
    run("add", {&x, &y}, [](Tape<double>&, auto& v) { return add(v[0], v[1]); });
    run("sub", {&x, &y}, [](Tape<double>&, auto& v) { return sub(v[0], v[1]); });
    run("mul", {&x, &y}, [](Tape<double>&, auto& v) { return mul(v[0], v[1]); });
  }
  {
    auto x = detail::random_tensor({b, n, in}, rng);
    auto y = detail::random_tensor({n, in}, rng);
    run("add_broadcast", {&x, &y}, [](Tape<double>&, auto& v) { return add_broadcast(v[0], v[1]); });
    run("mul_broadcast", {&x, &y}, [](Tape<double>&, auto& v) { return mul_broadcast(v[0], v[1]); });
  }
  {
    auto x = detail::off_zero_tensor({b, n, in}, rng);
    run("relu", {&x}, [](Tape<double>&, auto& v) { return relu(v[0]); });
    auto g = detail::random_tensor({b, n, in}, rng, -3.0, 3.0);
    run("gelu", {&g}, [](Tape<double>&, auto& v) { return gelu(v[0]); });
    auto s = detail::random_tensor({b, n, in}, rng, -3.0, 3.0);
    run("softmax", {&s}, [](Tape<double>&, auto& v) { return softmax(v[0]); });
    run("scale", {&s}, [](Tape<double>&, auto& v) { return scale(v[0], -1.7); });
    run("reshape", {&s}, [b, n, in](Tape<double>&, auto& v) { return reshape(v[0], {b * n, in}); });
    run("mean", {&s}, [](Tape<double>&, auto& v) { return mean(v[0], 1); });
    run("sum", {&s}, [](Tape<double>&, auto& v) { return sum(v[0]); });
    run("slice", {&s}, [n](Tape<double>&, auto& v) { return slice(v[0], 1, n / 2, n); });
    auto l = detail::random_tensor({b, n, in}, rng, -3.0, 3.0);
    run("smooth_l1", {&l}, [](Tape<double>&, auto& v) { return smooth_l1(v[0], 1.0); });
  }
  {
    const std::size_t heads = size(1, 3), dh = size(1, 4), nk = size(1, 6);
    auto q = detail::random_tensor({b, n, heads * dh}, rng);
    auto k = detail::random_tensor({b, nk, heads * dh}, rng);
    auto vv = detail::random_tensor({b, nk, heads * dh}, rng);
    run("attention", {&q, &k, &vv}, [heads](Tape<double>&, auto& v) { return attention(v[0], v[1], v[2], heads); });
  }
  {
    auto x = detail::random_tensor({b, n, in + 1}, rng);
    auto g = detail::random_tensor({in + 1}, rng, 0.5, 1.5);
    auto be = detail::random_tensor({in + 1}, rng);
    run("layer_norm", {&x, &g, &be}, [](Tape<double>&, auto& v) { return layer_norm(v[0], v[1], v[2]); });
  }
  {
    auto x = detail::random_tensor({b, n, 2}, rng);
    auto y = detail::random_tensor({b, n, 3}, rng);
    run("concat", {&x, &y}, [](Tape<double>&, auto& v) { return concat<double>({v[0], v[1]}, 2); });
  }
  return out;
}

}  // namespace resdyn::ad

// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "resdyn/autodiff/tape.hpp"
#include "resdyn/common/rng.hpp"

namespace resdyn::ad {

struct GradCheckOptions {
  double h = 1e-5;
  double abs_floor = 1e-8;
  // The denominator is at least scale_floor * max|grad| over all parameters. Some entries are
  // exactly zero by symmetry (key biases under softmax) and their central differences are
  // roundoff, which grows with the loss magnitude.
  double scale_floor = 1e-6;
  std::size_t samples_per_param = 100;  // coordinates checked per tensor; all when the tensor is smaller
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Builds a scalar loss on a fresh tape. Parameters must enter through tape.param().
using LossFn = std::function<Var<double>(Tape<double>&)>;

inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares reverse-mode gradients with central differences (f(x+h) - f(x-h)) / 2h on
/// sampled coordinates of every tensor in `params`. Parameter values are restored.
inline GradCheckResult grad_check(const LossFn& fn, const std::vector<Tensor<double>*>& params,
                                  const GradCheckOptions& opt = {}) {
  for (auto* p : params) p->zero_grad();
  {
    Tape<double> tape;
    Var<double> loss = fn(tape);
    tape.backward(loss);
  }
  double grad_scale = 0.0;
  for (auto* p : params) {
    for (double g : p->grad) grad_scale = std::max(grad_scale, std::abs(g));
  }
  const double floor = std::max(opt.abs_floor, opt.scale_floor * grad_scale);
  auto eval = [&] {
    Tape<double> tape;
    return fn(tape).item();
  };

  GradCheckResult res;
  Rng rng(opt.seed);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor<double>& p = *params[pi];
    std::vector<std::size_t> coords(p.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (coords.size() > opt.samples_per_param) {
      rng.shuffle(coords);
      coords.resize(opt.samples_per_param);
    }
    for (std::size_t k : coords) {
      const double saved = p.data[k];
      p.data[k] = saved + opt.h;
      const double up = eval();
      p.data[k] = saved - opt.h;
      const double down = eval();
      p.data[k] = saved;
      const double numeric = (up - down) / (2.0 * opt.h);
      const double err = relative_error(p.grad[k], numeric, floor);
      if (++res.checked == 1 || err > res.max_rel_error) {
        res.max_rel_error = err;
        res.worst_param = pi;
        res.worst_index = k;
        res.worst_analytic = p.grad[k];
        res.worst_numeric = numeric;
      }
    }
  }
  return res;
}

}  // namespace resdyn::ad

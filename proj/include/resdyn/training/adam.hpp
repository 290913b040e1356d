// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "resdyn/dytr/params.hpp"

namespace resdyn {

struct AdamConfig {
  double lr = 1e-3;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
struct AdamState {
  std::vector<std::vector<T>> m, v;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(const ModelParams<T>& p) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m.emplace_back(p[i].size(), T{});
      v.emplace_back(p[i].size(), T{});
    }
  }
};

/// One bias-corrected Adam update. Decoupled weight decay shrinks each parameter by
/// lr * wd before the moment-based step is applied.
template <class T>
void adam_step(ModelParams<T>& params, AdamState<T>& st, const AdamConfig& cfg) {
  if (st.m.size() != params.size()) throw std::invalid_argument("adam_step: state does not match parameters");
  ++st.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
  const T b1 = T(cfg.beta1), b2 = T(cfg.beta2);
  const T step_size = T(cfg.lr / bc1);
  const T inv_sqrt_bc2 = T(1.0 / std::sqrt(bc2));
  const T decay = T(1.0 - cfg.lr * cfg.weight_decay);
  const T eps = T(cfg.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (p.grad.empty()) continue;  // not reached by the loss
    if (p.grad.size() != p.size() || st.m[i].size() != p.size()) {
      throw std::invalid_argument("adam_step: size mismatch for " + params.names()[i]);
    }
    T* m = st.m[i].data();
    T* v = st.v[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      const T g = p.grad[k];
      m[k] = b1 * m[k] + (T(1) - b1) * g;
      v[k] = b2 * v[k] + (T(1) - b2) * g * g;
      p.data[k] = decay * p.data[k] - step_size * m[k] / (std::sqrt(v[k]) * inv_sqrt_bc2 + eps);
    }
  }
}

}  // namespace resdyn

// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "resdyn/autodiff/grad_check.hpp"
#include "resdyn/dytr/model.hpp"
#include "resdyn/training/loss.hpp"

namespace resdyn {

/// Random normalized batch shaped for `cfg`.
template <class T>
DynamicsBatch<T> random_batch(const DyTRConfig& cfg, std::size_t batch, std::uint64_t seed) {
  Rng rng = Rng::derived(seed, 0xba7);
  DynamicsBatch<T> b;
  b.batch = batch;
  b.seq = cfg.seq_len;
  b.step_dim = cfg.step_input_dim();
  b.steps.resize(batch * b.seq * b.step_dim);
  b.next.resize(batch * kStateDim);
  b.config.resize(batch * kConfigDim);
  for (auto* v : {&b.steps, &b.next, &b.config}) {
    for (auto& x : *v) x = T(rng.uniform(-1.5, 1.5));
  }
  return b;
}

/// End-to-end check of the weighted loss gradient with respect to every parameter tensor.
inline ad::GradCheckResult model_grad_check(const DyTRConfig& cfg, std::uint64_t seed = 0, std::size_t batch = 3,
                                            const ad::GradCheckOptions& opt = {}) {
  ModelParams<double> params = init_params<double>(cfg, seed);
  // Nonzero biases and embeddings so their gradients are exercised away from the init values.
  Rng rng = Rng::derived(seed, 0xb1a5);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].rank() == 1) {
      for (auto& v : params[i].data) v += rng.uniform(-0.1, 0.1);
    }
  }
  const auto b = random_batch<double>(cfg, batch, seed);
  std::vector<double> target(batch * kStateDim);
  for (auto& v : target) v = rng.uniform(-1.0, 1.0);
  ad::LossFn fn = [&](ad::Tape<double>& tape) {
    BoundParams<double> P(tape, params);
    auto pred = forward(P, b, cfg);
    return weighted_loss(pred, tape.constant({batch, kStateDim}, target), {1.0, 10.0, 100.0}, 1.0);
  };
  ad::GradCheckOptions o = opt;
  o.seed = seed;
  return ad::grad_check(fn, params.pointers(), o);
}

}  // namespace resdyn

// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "resdyn/autodiff/ops.hpp"
#include "resdyn/dytr/config.hpp"
#include "resdyn/vehicle/types.hpp"

namespace resdyn {

using LossWeights = std::array<double, kStateDim>;
inline constexpr LossWeights kDefaultLossWeights{1.0, 10.0, 1000.0};

/// sum_i alpha_i * smooth_l1(((s_hat + delta_hat) - s_gt)_i / scale_i) for one sample.
inline double weighted_loss(const DynState& delta_hat, const DynState& s_hat_next, const DynState& s_gt_next,
                            const LossWeights& alphas = kDefaultLossWeights, double beta = 1.0,
                            const std::array<double, kStateDim>& scale = {1.0, 1.0, 1.0}) {
  const DynState err = (s_hat_next + delta_hat) - s_gt_next;
  double total = 0.0;
  for (std::size_t i = 0; i < kStateDim; ++i) total += alphas[i] * ad::smooth_l1_value(err[i] / scale[i], beta);
  return total;
}

/// Batch mean of the weighted loss on normalized residuals. Since s_hat cancels,
/// (s_hat + delta_hat) - s_gt = delta_hat - delta. pred, target: [B, 3].
template <class T>
ad::Var<T> weighted_loss(ad::Var<T> pred, ad::Var<T> target, const LossWeights& alphas, T beta = T(1)) {
  if (pred.shape().size() != 2 || pred.shape()[1] != kStateDim) {
    throw ad::ShapeError("weighted_loss: expected [B, 3], got " + ad::to_string(pred.shape()));
  }
  ad::Tape<T>& tape = *pred.tape;
  const auto batch = static_cast<T>(pred.shape()[0]);
  auto w = tape.constant({kStateDim}, {T(alphas[0]), T(alphas[1]), T(alphas[2])});
  auto per = ad::mul_broadcast(ad::smooth_l1(ad::sub(pred, target), beta), w);
  return ad::scale(ad::sum(per), T(1) / batch);
}

}  // namespace resdyn

// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

// Per-step correction on top of the closed-loop base rollout stored in the dataset:
// corrected_{t+1} = s_hat_{t+1} + delta_hat_{t+1}. The base model is never restarted
// from corrected states.

#pragma once

#include <array>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "resdyn/dytr/checkpoint.hpp"
#include "resdyn/training/windows.hpp"

namespace resdyn {

/// Physical-unit residual predictions for a set of windows.
using ResidualPredictor = std::function<std::vector<DynState>(std::span<const Window>)>;

/// Mean and max absolute per-step error over a whole split (max is split-global).
struct StateErrors {
  std::array<double, kStateDim> mean{};
  std::array<double, kStateDim> max{};
  std::size_t count = 0;
  friend bool operator==(const StateErrors&, const StateErrors&) = default;
};

template <class T>
std::vector<DynState> predict_residuals_typed(const Checkpoint& ckpt, const ModelParams<T>& params,
                                              std::span<const Window> windows) {
  constexpr std::size_t kChunk = 1024;
  std::vector<DynState> out;
  out.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); i += kChunk) {
    auto w = windows.subspan(i, std::min(kChunk, windows.size() - i));
    ad::Tape<T> tape;
    BoundParams<T> P(tape, params);
    const auto& y = forward(P, make_batch<T>(w, ckpt.config, ckpt.stats), ckpt.config).value();
    for (std::size_t b = 0; b < w.size(); ++b) {
      const auto& sd = ckpt.stats.residual_std;
      out.push_back({static_cast<double>(y[b * 3]) * sd[0], static_cast<double>(y[b * 3 + 1]) * sd[1],
                     static_cast<double>(y[b * 3 + 2]) * sd[2]});
    }
  }
  return out;
}

/// Runs the network in the checkpoint's stored precision.
inline ResidualPredictor checkpoint_predictor(const Checkpoint& ckpt) {
  auto shared = std::make_shared<const Checkpoint>(ckpt);
  if (ckpt.precision == Precision::F32) {
    auto params = std::make_shared<const ModelParams<float>>(ckpt.params_as<float>());
    return [shared, params](std::span<const Window> w) { return predict_residuals_typed<float>(*shared, *params, w); };
  }
  return [shared](std::span<const Window> w) { return predict_residuals_typed<double>(*shared, shared->params, w); };
}

inline ResidualPredictor zero_predictor() {
  return [](std::span<const Window> w) { return std::vector<DynState>(w.size()); };
}

/// Returns the true residual; evaluation against it must give exactly zero error.
inline ResidualPredictor oracle_predictor() {
  return [](std::span<const Window> w) {
    std::vector<DynState> out;
    for (const auto& x : w) out.push_back(x.next().residual());
    return out;
  };
}

/// Windows of `seq_len` whose target step is >= first_target. Aligning first_target across
/// models with different T makes every model answer for the same target steps.
inline std::vector<Window> eval_windows(const std::vector<Run>& runs, std::size_t seq_len, std::size_t first_target) {
  std::vector<Window> out;
  for (const auto& w : make_windows(runs, seq_len).windows) {
    if (w.t + 1 >= first_target) out.push_back(w);
  }
  return out;
}

namespace detail {

struct ErrorAccumulator {
  std::array<double, kStateDim> sum{}, max{};
  std::size_t count = 0;
  void add(const DynState& err) {
    for (std::size_t i = 0; i < kStateDim; ++i) {
      const double e = std::abs(err[i]);
      sum[i] += e;
      max[i] = std::max(max[i], e);
    }
    ++count;
  }
  [[nodiscard]] StateErrors result() const {
    StateErrors r;
    r.count = count;
    r.max = max;
    for (std::size_t i = 0; i < kStateDim; ++i) r.mean[i] = count ? sum[i] / static_cast<double>(count) : 0.0;
    return r;
  }
};

}  // namespace detail

/// |s_hat + delta_hat - s_gt| at every target step of the windows.
inline StateErrors eval_windows_errors(const ResidualPredictor& predictor, std::span<const Window> windows) {
  constexpr std::size_t kChunk = 4096;
  detail::ErrorAccumulator acc;
  for (std::size_t i = 0; i < windows.size(); i += kChunk) {
    auto w = windows.subspan(i, std::min(kChunk, windows.size() - i));
    const auto pred = predictor(w);
    if (pred.size() != w.size()) throw std::logic_error("predictor returned wrong number of residuals");
    for (std::size_t k = 0; k < w.size(); ++k) {
      // Equals (s_hat + delta_hat) - s_gt, but is exact for a perfect prediction.
      acc.add(pred[k] - w[k].next().residual());
    }
  }
  return acc.result();
}

/// Error of the uncorrected base model on the same target steps.
inline StateErrors base_errors(std::span<const Window> windows) {
  return eval_windows_errors(zero_predictor(), windows);
}

inline StateErrors eval_split(const Checkpoint& ckpt, const std::vector<Run>& runs, std::size_t first_target = 0) {
  const auto windows = eval_windows(runs, ckpt.config.seq_len, first_target);
  if (windows.empty()) {
    throw std::invalid_argument("eval_split: no window of length T=" + std::to_string(ckpt.config.seq_len) +
                                " fits the split");
  }
  return eval_windows_errors(checkpoint_predictor(ckpt), windows);
}

/// 100 * (1 - err / base) per state.
inline std::array<double, kStateDim> reduction_pct(const std::array<double, kStateDim>& err,
                                                   const std::array<double, kStateDim>& base) {
  std::array<double, kStateDim> out{};
  for (std::size_t i = 0; i < kStateDim; ++i) out[i] = base[i] > 0 ? 100.0 * (1.0 - err[i] / base[i]) : 0.0;
  return out;
}

inline double average(const std::array<double, kStateDim>& v) { return (v[0] + v[1] + v[2]) / 3.0; }

/// Mean over states of err_i / base_i: the scale-free "average mean error". Equals
/// 1 - average reduction / 100.
inline double relative_average_error(const std::array<double, kStateDim>& err, const std::array<double, kStateDim>& base) {
  return 1.0 - average(reduction_pct(err, base)) / 100.0;
}

}  // namespace resdyn

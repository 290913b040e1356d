// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "resdyn/datagen/dataset_io.hpp"
#include "resdyn/dytr/model.hpp"
#include "resdyn/dytr/normalization.hpp"

namespace resdyn {

/// History steps t-T+1 .. t of one run; the prediction target is step t+1.
struct Window {
  const Run* run = nullptr;
  std::size_t t = 0;

  [[nodiscard]] const DatasetRecord& next() const { return run->records[t + 1]; }
};

struct WindowSet {
  std::vector<Window> windows;
  std::size_t skipped_runs = 0;  // runs shorter than T + 1 steps
};

/// Sliding windows inside each run; a window never spans two runs.
inline WindowSet make_windows(const std::vector<Run>& runs, std::size_t seq_len) {
  if (seq_len == 0) throw std::invalid_argument("make_windows: seq_len must be >= 1");
  WindowSet out;
  for (const auto& run : runs) {
    const std::size_t n = run.records.size();
    if (n < seq_len + 1) {
      ++out.skipped_runs;
      continue;
    }
    for (std::size_t t = seq_len - 1; t + 1 < n; ++t) out.windows.push_back({&run, t});
  }
  return out;
}

namespace detail {
inline double z(double v, double mean, double std) { return (v - mean) / std; }
}  // namespace detail

/// Normalized inputs for the selected windows, laid out for `cfg`.
template <class T>
DynamicsBatch<T> make_batch(std::span<const Window> windows, const DyTRConfig& cfg, const NormStats& st) {
  DynamicsBatch<T> b;
  b.batch = windows.size();
  b.seq = cfg.seq_len;
  b.step_dim = cfg.step_input_dim();
  b.steps.reserve(b.batch * b.seq * b.step_dim);
  b.next.reserve(b.batch * kStateDim);
  b.config.reserve(b.batch);
  for (const auto& w : windows) {
    const auto& nx = w.next();
    T ctx[kQueryInputDim];
    for (std::size_t i = 0; i < kStateDim; ++i) ctx[i] = T(detail::z(nx.s_hat[i], st.state_mean[i], st.state_std[i]));
    ctx[kStateDim] = T(detail::z(nx.mass, st.mass_mean, st.mass_std));
    for (std::size_t k = w.t + 1 - cfg.seq_len; k <= w.t; ++k) {
      const auto& r = w.run->records[k];
      for (std::size_t i = 0; i < kStateDim; ++i) b.steps.push_back(T(detail::z(r.s_hat[i], st.state_mean[i], st.state_std[i])));
      for (std::size_t i = 0; i < kNumWheels; ++i) b.steps.push_back(T(detail::z(r.u.torques[i], st.control_mean[i], st.control_std[i])));
      for (std::size_t i = 0; i < kNumWheels; ++i) {
        b.steps.push_back(T(detail::z(r.u.steers[i], st.control_mean[kNumWheels + i], st.control_std[kNumWheels + i])));
      }
      if (cfg.kind != ModelKind::DyTR) b.steps.insert(b.steps.end(), ctx, ctx + kQueryInputDim);
    }
    b.next.insert(b.next.end(), ctx, ctx + kStateDim);
    b.config.push_back(ctx[kStateDim]);
  }
  return b;
}

/// Normalized residual targets [B, 3].
template <class T>
std::vector<T> make_targets(std::span<const Window> windows, const NormStats& st) {
  std::vector<T> out;
  out.reserve(windows.size() * kStateDim);
  for (const auto& w : windows) {
    const DynState d = w.next().residual();
    for (std::size_t i = 0; i < kStateDim; ++i) out.push_back(T(d[i] / st.residual_std[i]));
  }
  return out;
}

}  // namespace resdyn

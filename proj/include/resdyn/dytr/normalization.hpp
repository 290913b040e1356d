// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "resdyn/datagen/dataset_io.hpp"
#include "resdyn/dytr/config.hpp"

namespace resdyn {

/// Per-channel z-score statistics from the train split. Channels whose spread is
/// numerically zero get std = 1 so they pass through centred but unscaled.
/// Residuals are scaled but not centred, so a zero network output means a zero correction.
struct NormStats {
  std::array<double, kStateDim> state_mean{}, state_std{1, 1, 1};
  std::array<double, kControlDim> control_mean{}, control_std{1, 1, 1, 1, 1, 1, 1, 1};
  double mass_mean = 0.0, mass_std = 1.0;
  std::array<double, kStateDim> residual_std{1, 1, 1};

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

namespace detail {

struct Moments {
  double n = 0, sum = 0, sq = 0;
  void add(double v) {
    n += 1;
    sum += v;
    sq += v * v;
  }
  [[nodiscard]] double mean() const { return n > 0 ? sum / n : 0.0; }
  [[nodiscard]] double std() const {
    if (n < 2) return 1.0;
    const double m = mean();
    const double var = std::max(0.0, sq / n - m * m);
    const double s = std::sqrt(var);
    return s > 1e-9 * std::max(1.0, std::abs(m)) ? s : 1.0;
  }
};

}  // namespace detail

inline NormStats compute_norm_stats(const std::vector<Run>& runs) {
  std::array<detail::Moments, kStateDim> st, res;
  std::array<detail::Moments, kControlDim> ctl;
  detail::Moments mass;
  for (const auto& run : runs) {
    for (const auto& r : run.records) {
      const DynState d = r.residual();
      for (std::size_t i = 0; i < kStateDim; ++i) {
        st[i].add(r.s_hat[i]);
        res[i].add(d[i]);
      }
      for (std::size_t w = 0; w < kNumWheels; ++w) {
        ctl[w].add(r.u.torques[w]);
        ctl[kNumWheels + w].add(r.u.steers[w]);
      }
      mass.add(r.mass);
    }
  }
  if (mass.n == 0) throw std::invalid_argument("normalization: no training records");
  NormStats s;
  for (std::size_t i = 0; i < kStateDim; ++i) {
    s.state_mean[i] = st[i].mean();
    s.state_std[i] = st[i].std();
    s.residual_std[i] = res[i].std();
  }
  for (std::size_t i = 0; i < kControlDim; ++i) {
    s.control_mean[i] = ctl[i].mean();
    s.control_std[i] = ctl[i].std();
  }
  s.mass_mean = mass.mean();
  s.mass_std = mass.std();
  return s;
}

inline nlohmann::json to_json(const NormStats& s) {
  return {{"state_mean", s.state_mean},     {"state_std", s.state_std},         {"control_mean", s.control_mean},
          {"control_std", s.control_std},   {"mass_mean", s.mass_mean},         {"mass_std", s.mass_std},
          {"residual_std", s.residual_std}};
}

inline NormStats norm_stats_from_json(const nlohmann::json& j) {
  NormStats s;
  j.at("state_mean").get_to(s.state_mean);
  j.at("state_std").get_to(s.state_std);
  j.at("control_mean").get_to(s.control_mean);
  j.at("control_std").get_to(s.control_std);
  j.at("mass_mean").get_to(s.mass_mean);
  j.at("mass_std").get_to(s.mass_std);
  j.at("residual_std").get_to(s.residual_std);
  return s;
}

}  // namespace resdyn

// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "resdyn/datagen/conditions.hpp"
#include "resdyn/vehicle/integrator.hpp"

namespace resdyn {

/// One co-simulation step of one (condition, mass) run.
struct DatasetRecord {
  std::string condition_id;
  std::size_t step = 0;
  double t = 0.0;
  WheelCommand u;
  DynState s_hat;  // base model
  DynState s_gt;   // surrogate
  double mass = 0.0;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;

  [[nodiscard]] DynState residual() const { return s_gt - s_hat; }
};

struct FilterBounds {
  double v_y_max = 5.0;
  double w_z_max = 1.5;
  double v_x_max = 45.0;
  friend bool operator==(const FilterBounds&, const FilterBounds&) = default;
};

inline nlohmann::json to_json(const FilterBounds& b) {
  return {{"v_y_max", b.v_y_max}, {"w_z_max", b.w_z_max}, {"v_x_max", b.v_x_max}};
}

inline FilterBounds filter_bounds_from_json(const nlohmann::json& j) {
  return {j.at("v_y_max").get<double>(), j.at("w_z_max").get<double>(), j.at("v_x_max").get<double>()};
}

/// Empty optional when the state is acceptable, otherwise a reason.
inline std::optional<std::string> check_state(const DynState& s, const FilterBounds& bounds) {
  if (!s.finite()) return "non-finite state";
  if (std::abs(s.v_y) > bounds.v_y_max) return "|v_y| exceeds bound";
  if (std::abs(s.w_z) > bounds.w_z_max) return "|w_z| exceeds bound";
  if (std::abs(s.v_x) > bounds.v_x_max) return "|v_x| exceeds bound";
  return std::nullopt;
}

struct FilterVerdict {
  bool accepted = true;
  std::string reason;
  std::size_t step = 0;
};

/// Rejects a trajectory if either model leaves the bounds anywhere.
inline FilterVerdict stability_filter(const std::vector<DatasetRecord>& records, const FilterBounds& bounds = {}) {
  for (const auto& r : records) {
    for (const char* which : {"base", "gt"}) {
      const DynState& s = which[0] == 'b' ? r.s_hat : r.s_gt;
      if (auto why = check_state(s, bounds)) return {false, std::string(which) + ": " + *why, r.step};
    }
    if (!std::isfinite(r.t) || !std::isfinite(r.mass)) return {false, "non-finite record", r.step};
    for (std::size_t w = 0; w < kNumWheels; ++w) {
      if (!std::isfinite(r.u.torques[w]) || !std::isfinite(r.u.steers[w])) return {false, "non-finite control", r.step};
    }
  }
  return {};
}

struct CosimResult {
  std::vector<DatasetRecord> records;
  FilterVerdict verdict;
  [[nodiscard]] bool accepted() const { return verdict.accepted; }
};

struct CosimOptions {
  FilterBounds bounds{};
  int gt_substeps = GtSimulator::kDefaultSubsteps;
};

/// Runs both models independently in closed loop on the same control program.
/// Geometry must agree between the two configs; `mass` overrides both.
inline CosimResult cosim_run(const ConditionSpec& spec, double mass, VehicleConfig base_cfg, VehicleConfig gt_cfg,
                             const CosimOptions& opts = {}) {
  base_cfg.m = mass;
  gt_cfg.m = mass;
  if (base_cfg.I_z != gt_cfg.I_z || base_cfg.a != gt_cfg.a || base_cfg.b != gt_cfg.b || base_cfg.tw != gt_cfg.tw ||
      base_cfg.r_w != gt_cfg.r_w) {
    throw std::invalid_argument("cosim_run: base and surrogate configs disagree on geometry");
  }
  base_cfg.validate();
  gt_cfg.validate();
  const auto controls = gen_controls(spec);

  CosimResult result;
  result.records.reserve(controls.size());
  BaseSimulator base(base_cfg, spec.initial_state);
  GtSimulator gt(gt_cfg, spec.initial_state, opts.gt_substeps);
  for (std::size_t k = 0; k < controls.size(); ++k) {
    DatasetRecord rec{spec.id, k, static_cast<double>(k) * spec.dt, controls[k], base.state(), gt.state().core, mass};
    result.records.push_back(rec);
    if (auto why = check_state(rec.s_hat, opts.bounds)) {
      result.verdict = {false, "base: " + *why, k};
      return result;
    }
    if (auto why = check_state(rec.s_gt, opts.bounds)) {
      result.verdict = {false, "gt: " + *why, k};
      return result;
    }
    if (k + 1 == controls.size()) break;
    try {
      base.step(controls[k], spec.dt);
      gt.step(controls[k], spec.dt);
    } catch (const IntegrationFault& e) {
      result.verdict = {false, std::string("integration fault: ") + e.what(), k};
      return result;
    }
  }
  result.verdict = stability_filter(result.records, opts.bounds);
  return result;
}

inline CosimResult cosim_run(const ConditionSpec& spec, double mass, const VehicleConfig& cfg,
                             const CosimOptions& opts = {}) {
  return cosim_run(spec, mass, cfg, cfg, opts);
}

}  // namespace resdyn

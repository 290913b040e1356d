// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "resdyn/datagen/generate.hpp"
#include "resdyn/dytr/config.hpp"
#include "resdyn/training/trainer.hpp"
#include "resdyn/vehicle/config_io.hpp"

namespace resdyn {

/// Everything a command can be configured with. Sections mirror the owning modules.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  VehicleConfig vehicle;
  ConditionRanges ranges;
  FilterBounds filter_bounds;
  int gt_substeps = GtSimulator::kDefaultSubsteps;
  double max_reject_fraction = 0.5;
  DyTRConfig model;
  TrainConfig train;

  /// --seed flag, else the config file, else RESDYN_SEED, else 0.
  [[nodiscard]] std::uint64_t resolve_seed(std::optional<std::uint64_t> flag) const {
    if (flag) return *flag;
    if (seed) return *seed;
    return env_seed(0);
  }
};

namespace detail {

template <class Fn>
void for_each_range_field(ConditionRanges& r, Fn&& fn) {
  fn("torque_amplitude_lo", r.torque_amplitude_lo);
  fn("torque_amplitude_hi", r.torque_amplitude_hi);
  fn("torque_offset_lo", r.torque_offset_lo);
  fn("torque_offset_hi", r.torque_offset_hi);
  fn("steer_amplitude_lo", r.steer_amplitude_lo);
  fn("steer_amplitude_hi", r.steer_amplitude_hi);
  fn("frequency_lo", r.frequency_lo);
  fn("frequency_hi", r.frequency_hi);
  fn("initial_vx_lo", r.initial_vx_lo);
  fn("initial_vx_hi", r.initial_vx_hi);
  fn("duration", r.duration);
  fn("dt", r.dt);
  fn("rear_steer_ratio", r.rear_steer_ratio);
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument(where + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace detail

inline nlohmann::json to_json(const ConditionRanges& r) {
  nlohmann::json j = nlohmann::json::object();
  ConditionRanges copy = r;
  detail::for_each_range_field(copy, [&](const char* k, double& v) { j[k] = v; });
  return j;
}

inline ConditionRanges ranges_from_json(const nlohmann::json& j, ConditionRanges r = {}) {
  if (!j.is_object()) throw std::invalid_argument("dataset.ranges must be an object");
  std::size_t matched = 0;
  detail::for_each_range_field(r, [&](const char* k, double& v) {
    if (auto it = j.find(k); it != j.end()) {
      v = it->get<double>();
      ++matched;
    }
  });
  if (matched != j.size()) {
    ConditionRanges probe;
    for (const auto& [key, _] : j.items()) {
      bool known = false;
      detail::for_each_range_field(probe, [&](const char* k, double&) { known = known || key == k; });
      if (!known) throw std::invalid_argument("dataset.ranges: unknown key '" + key + "'");
    }
  }
  auto ordered = [](double lo, double hi, const char* what) {
    if (!(lo <= hi)) throw std::invalid_argument(std::string("dataset.ranges: ") + what + " lo > hi");
  };
  ordered(r.torque_amplitude_lo, r.torque_amplitude_hi, "torque_amplitude");
  ordered(r.torque_offset_lo, r.torque_offset_hi, "torque_offset");
  ordered(r.steer_amplitude_lo, r.steer_amplitude_hi, "steer_amplitude");
  ordered(r.frequency_lo, r.frequency_hi, "frequency");
  ordered(r.initial_vx_lo, r.initial_vx_hi, "initial_vx");
  if (!(r.duration > 0) || !(r.dt > 0)) throw std::invalid_argument("dataset.ranges: duration and dt must be > 0");
  return r;
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j = {{"vehicle", to_json(c.vehicle)},
                      {"dataset",
                       {{"ranges", to_json(c.ranges)},
                        {"filter_bounds", to_json(c.filter_bounds)},
                        {"gt_substeps", c.gt_substeps},
                        {"max_reject_fraction", c.max_reject_fraction}}},
                      {"model", to_json(c.model)},
                      {"train", to_json(c.train)}};
  if (c.seed) j["seed"] = *c.seed;
  return j;
}

/// Validates the whole document before returning; unknown keys anywhere are errors.
inline RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("run config must be a JSON object");
  detail::reject_unknown(j, {"seed", "vehicle", "dataset", "model", "train"}, "run config");
  RunConfig c;
  try {
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("vehicle")) c.vehicle = vehicle_config_from_json(j.at("vehicle"));
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      if (!d.is_object()) throw std::invalid_argument("dataset must be an object");
      detail::reject_unknown(d, {"ranges", "filter_bounds", "gt_substeps", "max_reject_fraction"}, "dataset");
      if (d.contains("ranges")) c.ranges = ranges_from_json(d.at("ranges"));
      if (d.contains("filter_bounds")) {
        detail::reject_unknown(d.at("filter_bounds"), {"v_y_max", "w_z_max", "v_x_max"}, "dataset.filter_bounds");
        c.filter_bounds = filter_bounds_from_json(d.at("filter_bounds"));
      }
      if (d.contains("gt_substeps")) c.gt_substeps = d.at("gt_substeps").get<int>();
      if (d.contains("max_reject_fraction")) c.max_reject_fraction = d.at("max_reject_fraction").get<double>();
      if (c.gt_substeps < 1) throw std::invalid_argument("dataset.gt_substeps must be >= 1");
      if (!(c.max_reject_fraction >= 0 && c.max_reject_fraction <= 1)) {
        throw std::invalid_argument("dataset.max_reject_fraction must lie in [0, 1]");
      }
    }
    if (j.contains("model")) c.model = dytr_config_from_json(j.at("model"));
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("run config: ") + e.what());
  }
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config " + path.string());
  try {
    return run_config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

}  // namespace resdyn

// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "resdyn/common/rng.hpp"
#include "resdyn/datagen/conditions.hpp"
#include "resdyn/datagen/cosim.hpp"

namespace resdyn {

enum class Split { Train, Val1, Val2 };
inline constexpr std::array<Split, 3> kAllSplits{Split::Train, Split::Val1, Split::Val2};

inline const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val1: return "val1";
    case Split::Val2: return "val2";
  }
  return "?";
}

inline Split split_from_name(const std::string& name) {
  for (Split s : kAllSplits) {
    if (name == split_name(s)) return s;
  }
  throw std::invalid_argument("unknown split '" + name + "'");
}

struct SplitEntry {
  std::string condition_id;
  double mass = 0.0;
  std::string file;
  friend bool operator==(const SplitEntry&, const SplitEntry&) = default;
};

struct SplitManifest {
  std::vector<SplitEntry> train, val1, val2;
  std::uint64_t seed = 0;
  double dt = 0.01;
  FilterBounds filter_bounds{};
  std::vector<ConditionSpec> conditions;  // every condition referenced by an entry

  std::vector<SplitEntry>& entries(Split s) { return s == Split::Train ? train : (s == Split::Val1 ? val1 : val2); }
  const std::vector<SplitEntry>& entries(Split s) const {
    return s == Split::Train ? train : (s == Split::Val1 ? val1 : val2);
  }

  const ConditionSpec& condition(const std::string& id) const {
    for (const auto& c : conditions) {
      if (c.id == id) return c;
    }
    throw std::out_of_range("manifest has no condition '" + id + "'");
  }

  friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

/// Which conditions and masses go into each split.
struct SplitRecipe {
  std::size_t train_conditions = 8;
  std::vector<double> train_masses{1800.0, 2000.0, 2200.0};
  double val1_mass = 2100.0;
  std::size_t val2_conditions = 4;
  double val2_mass = 2100.0;

  static SplitRecipe desk() { return {}; }
  static SplitRecipe paper() {
    return {28, {1600.0, 1700.0, 1800.0, 1900.0, 2000.0, 2200.0, 2300.0, 2400.0, 2500.0}, 2100.0, 28, 2100.0};
  }

  [[nodiscard]] std::size_t pool_size() const { return train_conditions + val2_conditions; }
};

inline bool contains_mass(const std::vector<double>& masses, double m) {
  return std::find(masses.begin(), masses.end(), m) != masses.end();
}

/// Assigns pool conditions to splits: the first `train_conditions` ids serve train and val1,
/// the next `val2_conditions` ids serve val2 only.
inline SplitManifest build_splits(const std::vector<std::string>& condition_pool, const SplitRecipe& recipe) {
  if (condition_pool.empty()) throw std::invalid_argument("build_splits: empty condition pool");
  if (recipe.train_conditions == 0 || recipe.train_masses.empty()) {
    throw std::invalid_argument("build_splits: train split needs at least one condition and one mass");
  }
  if (condition_pool.size() < recipe.pool_size()) {
    throw std::invalid_argument("build_splits: pool has " + std::to_string(condition_pool.size()) +
                                " conditions, recipe needs " + std::to_string(recipe.pool_size()));
  }
  if (std::set<std::string>(condition_pool.begin(), condition_pool.end()).size() != condition_pool.size()) {
    throw std::invalid_argument("build_splits: duplicate condition ids in pool");
  }
  if (std::set<double>(recipe.train_masses.begin(), recipe.train_masses.end()).size() != recipe.train_masses.size()) {
    throw std::invalid_argument("build_splits: duplicate train masses");
  }
  if (contains_mass(recipe.train_masses, recipe.val1_mass)) {
    throw std::invalid_argument("build_splits: val1 mass must not be a train mass");
  }
  if (recipe.val2_conditions > 0 && contains_mass(recipe.train_masses, recipe.val2_mass)) {
    throw std::invalid_argument("build_splits: val2 mass must not be a train mass");
  }

  SplitManifest m;
  for (std::size_t i = 0; i < recipe.train_conditions; ++i) {
    for (double mass : recipe.train_masses) m.train.push_back({condition_pool[i], mass, {}});
    m.val1.push_back({condition_pool[i], recipe.val1_mass, {}});
  }
  for (std::size_t i = recipe.train_conditions; i < recipe.pool_size(); ++i) {
    m.val2.push_back({condition_pool[i], recipe.val2_mass, {}});
  }
  return m;
}

/// Throws if the manifest violates the split hygiene rules.
inline void check_split_invariants(const SplitManifest& m) {
  std::set<std::string> train_conds;
  std::set<double> train_masses;
  std::set<std::pair<std::string, double>> seen;
  for (const auto& e : m.train) {
    train_conds.insert(e.condition_id);
    train_masses.insert(e.mass);
  }
  for (Split s : kAllSplits) {
    for (const auto& e : m.entries(s)) {
      if (!seen.insert({e.condition_id, e.mass}).second) {
        throw std::logic_error("split hygiene: (" + e.condition_id + ", " + std::to_string(e.mass) +
                               ") appears twice");
      }
    }
  }
  for (const auto& e : m.val1) {
    if (!train_conds.contains(e.condition_id)) throw std::logic_error("val1 condition not in train: " + e.condition_id);
    if (train_masses.contains(e.mass)) throw std::logic_error("val1 mass seen in train");
  }
  for (const auto& e : m.val2) {
    if (train_conds.contains(e.condition_id)) throw std::logic_error("val2 condition seen in train: " + e.condition_id);
    if (train_masses.contains(e.mass)) throw std::logic_error("val2 mass seen in train");
  }
}

/// Ranges of the seeded random condition draws. Torques are per wheel. The bounds keep
/// nearly every draw inside the stability filter at 15 m/s: wider torque ranges drive
/// the vehicle to standstill or past 45 m/s within 20 s, wider steer ranges spin it.
struct ConditionRanges {
  double torque_amplitude_lo = 0.0, torque_amplitude_hi = 300.0;
  double torque_offset_lo = -50.0, torque_offset_hi = 120.0;
  double steer_amplitude_lo = 0.0, steer_amplitude_hi = 0.06;
  double frequency_lo = 0.05, frequency_hi = 0.5;
  double initial_vx_lo = 15.0, initial_vx_hi = 15.0;
  double duration = 20.0;
  double dt = 0.01;
  double rear_steer_ratio = 0.3;
};

inline ConditionSpec draw_condition(Rng& rng, const std::string& id, std::uint64_t seed,
                                    const ConditionRanges& r = {}) {
  ConditionSpec c;
  c.id = id;
  c.seed = seed;
  c.duration = r.duration;
  c.dt = r.dt;
  c.rear_steer_ratio = r.rear_steer_ratio;
  c.initial_state = {rng.uniform(r.initial_vx_lo, r.initial_vx_hi), 0.0, 0.0};
  c.torque.amplitude = rng.uniform(r.torque_amplitude_lo, r.torque_amplitude_hi);
  c.torque.frequency = rng.uniform(r.frequency_lo, r.frequency_hi);
  c.torque.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  c.torque.offset = rng.uniform(r.torque_offset_lo, r.torque_offset_hi);
  c.front_steer.amplitude = rng.uniform(r.steer_amplitude_lo, r.steer_amplitude_hi);
  c.front_steer.frequency = rng.uniform(r.frequency_lo, r.frequency_hi);
  c.front_steer.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  c.front_steer.offset = 0.0;
  return c;
}

inline nlohmann::json to_json(const SplitManifest& m) {
  nlohmann::json splits = nlohmann::json::object();
  for (Split s : kAllSplits) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : m.entries(s)) arr.push_back({{"condition_id", e.condition_id}, {"mass", e.mass}, {"file", e.file}});
    splits[split_name(s)] = arr;
  }
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& c : m.conditions) conds.push_back(to_json(c));
  return {{"seed", m.seed}, {"dt", m.dt}, {"splits", splits}, {"filter_bounds", to_json(m.filter_bounds)},
          {"conditions", conds}};
}

inline SplitManifest manifest_from_json(const nlohmann::json& j) {
  SplitManifest m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.dt = j.at("dt").get<double>();
  m.filter_bounds = filter_bounds_from_json(j.at("filter_bounds"));
  for (Split s : kAllSplits) {
    for (const auto& e : j.at("splits").at(split_name(s))) {
      m.entries(s).push_back(
          {e.at("condition_id").get<std::string>(), e.at("mass").get<double>(), e.at("file").get<std::string>()});
    }
  }
  if (auto it = j.find("conditions"); it != j.end()) {
    for (const auto& c : *it) m.conditions.push_back(condition_from_json(c));
  }
  return m;
}

}  // namespace resdyn

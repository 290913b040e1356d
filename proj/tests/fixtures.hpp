// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

// Small deterministic datasets shared by the test binaries.

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "resdyn/datagen/generate.hpp"

namespace resdyn::testing {

/// One co-simulated run with both torque and steering excitation.
inline Run fixture_run(const std::string& id, double mass, std::size_t steps, std::uint64_t seed = 0) {
  Rng rng(seed);
  ConditionSpec s;
  s.id = id;
  s.dt = 0.01;
  s.duration = static_cast<double>(steps) * s.dt;
  s.initial_state = {15, 0, 0};
  s.torque = {rng.uniform(50, 250), rng.uniform(0.1, 0.5), rng.uniform(0, 6), rng.uniform(0, 100)};
  s.front_steer = {rng.uniform(0.02, 0.06), rng.uniform(0.1, 0.5), rng.uniform(0, 6), 0.0};
  auto r = cosim_run(s, mass, VehicleConfig{});
  if (!r.accepted()) throw std::runtime_error("fixture run rejected: " + r.verdict.reason);
  return {id, mass, std::move(r.records)};
}

/// Small dataset through the real generator: 2 train conditions x 2 masses, short runs.
inline Dataset tiny_dataset(std::uint64_t seed = 1, double duration = 2.0) {
  GenerationOptions o;
  o.seed = seed;
  o.recipe.train_conditions = 2;
  o.recipe.train_masses = {1800.0, 2200.0};
  o.recipe.val2_conditions = 1;
  o.ranges.duration = duration;
  return generate_dataset(o);
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("resdyn_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace resdyn::testing

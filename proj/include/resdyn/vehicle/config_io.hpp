// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "resdyn/vehicle/types.hpp"

namespace resdyn {

namespace detail {
template <class Fn>
void for_each_vehicle_field(VehicleConfig& c, Fn&& fn) {
  fn("m", c.m);
  fn("I_z", c.I_z);
  fn("a", c.a);
  fn("b", c.b);
  fn("tw", c.tw);
  fn("r_w", c.r_w);
  fn("h", c.h);
  fn("C_f", c.C_f);
  fn("C_r", c.C_r);
  fn("B", c.B);
  fn("C", c.C);
  fn("D", c.D);
  fn("E", c.E);
  fn("mu", c.mu);
  fn("I_w", c.I_w);
  fn("f_r", c.f_r);
  fn("c_d", c.c_d);
}
}  // namespace detail

inline nlohmann::json to_json(const VehicleConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  VehicleConfig copy = cfg;
  detail::for_each_vehicle_field(copy, [&](const char* key, double& v) { j[key] = v; });
  return j;
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline VehicleConfig vehicle_config_from_json(const nlohmann::json& j, VehicleConfig base = {}) {
  if (!j.is_object()) throw std::invalid_argument("vehicle config must be a JSON object");
  std::size_t matched = 0;
  detail::for_each_vehicle_field(base, [&](const char* key, double& v) {
    if (auto it = j.find(key); it != j.end()) {
      if (!it->is_number()) throw std::invalid_argument(std::string("vehicle config: '") + key + "' must be a number");
      v = it->get<double>();
      ++matched;
    }
  });
  if (matched != j.size()) {
    VehicleConfig probe;
    for (const auto& [key, _] : j.items()) {
      bool known = false;
      detail::for_each_vehicle_field(probe, [&](const char* k, double&) { known = known || key == k; });
      if (!known) throw std::invalid_argument("vehicle config: unknown key '" + key + "'");
    }
  }
  base.validate();
  return base;
}

inline VehicleConfig load_vehicle_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vehicle config: " + path);
  return vehicle_config_from_json(nlohmann::json::parse(in));
}

}  // namespace resdyn

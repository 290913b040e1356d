// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>

#include "resdyn/vehicle/types.hpp"

namespace resdyn {

/// Speeds below this are treated as standstill in slip computations.
inline constexpr double kVEps = 0.1;

/// Body-frame velocity of a wheel's contact point.
struct WheelVelocity {
  double vx;
  double vy;
};

inline WheelVelocity wheel_velocity(std::size_t wheel, const DynState& s, const VehicleConfig& cfg) {
  return {s.v_x - cfg.wheel_y(wheel) * s.w_z, s.v_y + cfg.wheel_x(wheel) * s.w_z};
}

/// Slip angle of one wheel. Below kVEps forward speed the steering angle alone is returned.
inline double slip_angle(std::size_t wheel, const DynState& s, double steer, const VehicleConfig& cfg) {
  if (s.v_x < kVEps) return steer;
  const auto v = wheel_velocity(wheel, s, cfg);
  return steer - std::atan2(v.vy, v.vx);
}

inline double linear_lateral_force(double alpha, double stiffness) { return stiffness * alpha; }

/// Magic formula without offsets: F = mu*Fz*D*sin(C*atan(B*s - E*(B*s - atan(B*s)))).
inline double pacejka_force(double slip, double normal_load, const VehicleConfig& cfg) {
  const double bs = cfg.B * slip;
  return cfg.mu * normal_load * cfg.D * std::sin(cfg.C * std::atan(bs - cfg.E * (bs - std::atan(bs))));
}

/// Quasi-static load transfer. `ax`, `ay` are body-frame accelerations (m/s^2).
inline std::array<double, kNumWheels> normal_loads(const DynState& /*state*/, double ax, double ay,
                                                   const VehicleConfig& cfg) {
  const double wheelbase = cfg.a + cfg.b;
  const double weight = cfg.m * kGravity;
  const double front_static = 0.5 * weight * cfg.b / wheelbase;
  const double rear_static = 0.5 * weight * cfg.a / wheelbase;
  const double longitudinal = cfg.m * ax * cfg.h / (2.0 * wheelbase);
  const double lateral = cfg.m * ay * cfg.h / (2.0 * cfg.tw);
  // Positive ay loads the right-hand (negative y) wheels.
  std::array<double, kNumWheels> loads{
      front_static - longitudinal - lateral,
      front_static - longitudinal + lateral,
      rear_static + longitudinal - lateral,
      rear_static + longitudinal + lateral,
  };
  for (double& f : loads) f = std::max(0.0, f);
  return loads;
}

}  // namespace resdyn

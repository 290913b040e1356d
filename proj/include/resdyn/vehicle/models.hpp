// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

// Two planar double-track vehicle models sharing one rigid-body balance:
//
//   base: rigid wheels (F_x = T / r_w), linear tires, static loads.
//   gt:   wheel spin dynamics, combined-slip magic-formula tires, quasi-static
//         load transfer driven by the accelerations of the previous step.
//
// The gap between the two is the residual the correction network learns.

#pragma once

#include <cmath>

#include "resdyn/vehicle/tire.hpp"
#include "resdyn/vehicle/types.hpp"

namespace resdyn {

namespace detail {

inline double sign(double x) { return (x > 0.0) - (x < 0.0); }

struct BodyForces {
  double fx = 0.0;
  double fy = 0.0;
  double mz = 0.0;

  /// Rotates a wheel-frame force by `steer` and accumulates it about the CoG.
  void add_wheel(std::size_t wheel, double f_long, double f_lat, double steer, const VehicleConfig& cfg) {
    const double c = std::cos(steer);
    const double s = std::sin(steer);
    const double bx = f_long * c - f_lat * s;
    const double by = f_long * s + f_lat * c;
    fx += bx;
    fy += by;
    mz += cfg.wheel_x(wheel) * by - cfg.wheel_y(wheel) * bx;
  }
};

inline double resistance(const DynState& s, const VehicleConfig& cfg) {
  return cfg.f_r * cfg.m * kGravity * sign(s.v_x) + cfg.c_d * s.v_x * std::abs(s.v_x);
}

inline DynState rigid_body_rates(const DynState& s, const BodyForces& f, const VehicleConfig& cfg) {
  return {(f.fx - resistance(s, cfg)) / cfg.m + s.v_y * s.w_z, f.fy / cfg.m - s.v_x * s.w_z, f.mz / cfg.I_z};
}

}  // namespace detail

/// Continuous-time right-hand side of the simplified 3-DoF base model.
inline DynState base_derivative(const DynState& s, const WheelCommand& cmd, const VehicleConfig& cfg) {
  detail::BodyForces forces;
  for (std::size_t w = 0; w < kNumWheels; ++w) {
    const double stiffness = is_front(w) ? cfg.C_f : cfg.C_r;
    const double alpha = slip_angle(w, s, cmd.steers[w], cfg);
    forces.add_wheel(w, cmd.torques[w] / cfg.r_w, linear_lateral_force(alpha, stiffness), cmd.steers[w], cfg);
  }
  return detail::rigid_body_rates(s, forces, cfg);
}

/// Body-frame accelerations fed to the load-transfer model.
struct LoadAccel {
  double ax = 0.0;
  double ay = 0.0;
  friend bool operator==(const LoadAccel&, const LoadAccel&) = default;
};

/// Full surrogate evaluation: state derivative plus the accelerations it implies.
struct GtEvaluation {
  ExtendedState derivative;
  LoadAccel accel;
};

inline double slip_ratio(double wheel_speed, double v_long, const VehicleConfig& cfg) {
  return (cfg.r_w * wheel_speed - v_long) / std::max(std::abs(v_long), kVEps);
}

inline GtEvaluation gt_evaluate(const ExtendedState& x, const WheelCommand& cmd, const VehicleConfig& cfg,
                                const LoadAccel& load_accel) {
  const auto loads = normal_loads(x.core, load_accel.ax, load_accel.ay, cfg);
  detail::BodyForces forces;
  GtEvaluation out;
  for (std::size_t w = 0; w < kNumWheels; ++w) {
    const double steer = cmd.steers[w];
    const auto v = wheel_velocity(w, x.core, cfg);
    const double v_long = v.vx * std::cos(steer) + v.vy * std::sin(steer);
    const double kappa = slip_ratio(x.wheel_speeds[w], v_long, cfg);
    const double alpha = slip_angle(w, x.core, steer, cfg);

    const double fz = loads[w];
    const double f_long = pacejka_force(kappa, fz, cfg);
    double f_lat = pacejka_force(alpha, fz, cfg);
    const double grip = cfg.mu * fz;
    if (grip > 0.0) {
      const double ratio = f_long / grip;
      f_lat *= std::sqrt(std::max(0.0, 1.0 - ratio * ratio));
    }
    forces.add_wheel(w, f_long, f_lat, steer, cfg);
    out.derivative.wheel_speeds[w] = (cmd.torques[w] - cfg.r_w * f_long) / cfg.I_w;
  }
  out.derivative.core = detail::rigid_body_rates(x.core, forces, cfg);
  out.accel = {(forces.fx - detail::resistance(x.core, cfg)) / cfg.m, forces.fy / cfg.m};
  return out;
}

/// Continuous-time right-hand side of the high-fidelity surrogate.
inline ExtendedState gt_derivative(const ExtendedState& x, const WheelCommand& cmd, const VehicleConfig& cfg,
                                   const LoadAccel& load_accel = {}) {
  return gt_evaluate(x, cmd, cfg, load_accel).derivative;
}

}  // namespace resdyn

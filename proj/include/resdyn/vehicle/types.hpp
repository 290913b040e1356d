// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace resdyn {

inline constexpr double kGravity = 9.81;

/// Wheel ordering used everywhere: front-left, front-right, rear-left, rear-right.
enum Wheel : std::size_t { FL = 0, FR = 1, RL = 2, RR = 3 };
inline constexpr std::size_t kNumWheels = 4;

inline constexpr bool is_front(std::size_t wheel) { return wheel < 2; }
inline constexpr bool is_left(std::size_t wheel) { return wheel % 2 == 0; }
inline constexpr std::size_t mirror_wheel(std::size_t wheel) { return wheel ^ 1U; }

/// Planar dynamics state: body-frame velocities and yaw rate.
struct DynState {
  double v_x = 0.0;  // m/s
  double v_y = 0.0;  // m/s
  double w_z = 0.0;  // rad/s (yaw rate)

  friend DynState operator+(const DynState& l, const DynState& r) {
    return {l.v_x + r.v_x, l.v_y + r.v_y, l.w_z + r.w_z};
  }
  friend DynState operator-(const DynState& l, const DynState& r) {
    return {l.v_x - r.v_x, l.v_y - r.v_y, l.w_z - r.w_z};
  }
  friend DynState operator*(double k, const DynState& s) { return {k * s.v_x, k * s.v_y, k * s.w_z}; }
  friend bool operator==(const DynState&, const DynState&) = default;

  [[nodiscard]] double operator[](std::size_t i) const { return i == 0 ? v_x : (i == 1 ? v_y : w_z); }
  [[nodiscard]] bool finite() const { return std::isfinite(v_x) && std::isfinite(v_y) && std::isfinite(w_z); }
};

/// Per-wheel drive torques (N*m) and steering angles (rad), ordered FL, FR, RL, RR.
struct WheelCommand {
  std::array<double, kNumWheels> torques{};
  std::array<double, kNumWheels> steers{};

  friend bool operator==(const WheelCommand&, const WheelCommand&) = default;

  [[nodiscard]] bool within(double torque_max, double steer_max) const {
    for (std::size_t i = 0; i < kNumWheels; ++i) {
      if (!(std::abs(torques[i]) <= torque_max) || !(std::abs(steers[i]) <= steer_max)) return false;
    }
    return true;
  }
};

inline constexpr double kDefaultSteerMax = 0.5;
inline constexpr double kDefaultTorqueMax = 1500.0;

/// Physical parameters shared by the base model and the high-fidelity surrogate.
/// Field names match the JSON config keys.
struct VehicleConfig {
  double m = 2000.0;     // kg
  double I_z = 3200.0;   // kg*m^2
  double a = 1.2;        // CoG to front axle, m
  double b = 1.6;        // CoG to rear axle, m
  double tw = 1.6;       // track width, m (wheels sit at +-tw/2)
  double r_w = 0.35;     // wheel radius, m
  double h = 0.6;        // CoG height, m
  double C_f = 80000.0;  // cornering stiffness of each front tire, N/rad
  double C_r = 80000.0;  // cornering stiffness of each rear tire, N/rad
  double B = 10.0;
  double C = 1.9;
  double D = 1.0;
  double E = 0.97;
  double mu = 0.9;
  double I_w = 1.5;   // wheel spin inertia, kg*m^2
  double f_r = 0.012;
  double c_d = 0.4;   // N/(m/s)^2

  friend bool operator==(const VehicleConfig&, const VehicleConfig&) = default;

  /// Throws std::invalid_argument naming the first violated bound.
  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw std::invalid_argument(std::string("invalid vehicle config: ") + what);
    };
    require(m > 0, "m must be > 0");
    require(I_z > 0, "I_z must be > 0");
    require(a > 0 && b > 0, "a and b must be > 0");
    require(tw > 0, "tw must be > 0");
    require(r_w > 0, "r_w must be > 0");
    require(mu > 0 && mu <= 2, "mu must lie in (0, 2]");
    require(C_f > 0 && C_r > 0, "cornering stiffnesses must be > 0");
    require(I_w > 0, "I_w must be > 0");
    require(h >= 0 && f_r >= 0 && c_d >= 0, "h, f_r, c_d must be >= 0");
  }

  [[nodiscard]] double wheel_x(std::size_t wheel) const { return is_front(wheel) ? a : -b; }
  [[nodiscard]] double wheel_y(std::size_t wheel) const { return is_left(wheel) ? 0.5 * tw : -0.5 * tw; }
};

/// Surrogate state: rigid-body state plus the four wheel spin rates (rad/s).
struct ExtendedState {
  DynState core;
  std::array<double, kNumWheels> wheel_speeds{};

  friend ExtendedState operator+(const ExtendedState& l, const ExtendedState& r) {
    ExtendedState out{l.core + r.core, {}};
    for (std::size_t i = 0; i < kNumWheels; ++i) out.wheel_speeds[i] = l.wheel_speeds[i] + r.wheel_speeds[i];
    return out;
  }
  friend ExtendedState operator*(double k, const ExtendedState& s) {
    ExtendedState out{k * s.core, {}};
    for (std::size_t i = 0; i < kNumWheels; ++i) out.wheel_speeds[i] = k * s.wheel_speeds[i];
    return out;
  }
  friend bool operator==(const ExtendedState&, const ExtendedState&) = default;

  [[nodiscard]] bool finite() const {
    if (!core.finite()) return false;
    for (double w : wheel_speeds) {
      if (!std::isfinite(w)) return false;
    }
    return true;
  }

  /// Free-rolling wheels matching the body speed.
  static ExtendedState rolling(const DynState& s, const VehicleConfig& cfg) {
    ExtendedState out{s, {}};
    out.wheel_speeds.fill(s.v_x / cfg.r_w);
    return out;
  }
};

}  // namespace resdyn

// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "resdyn/vehicle/models.hpp"
#include "resdyn/vehicle/types.hpp"

namespace resdyn {

inline constexpr double kDefaultDt = 0.01;

class IntegrationFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline bool all_finite(double x) { return std::isfinite(x); }
template <class S>
  requires requires(const S& s) { s.finite(); }
bool all_finite(const S& s) {
  return s.finite();
}
}  // namespace detail

/// Classical fourth-order Runge-Kutta step of x' = f(x).
template <class State, class Fn>
  requires std::is_invocable_r_v<State, Fn&, const State&>
State rk4_step(Fn&& f, const State& x, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be > 0");
  const State k1 = f(x);
  const State k2 = f(x + (0.5 * dt) * k1);
  const State k3 = f(x + (0.5 * dt) * k2);
  const State k4 = f(x + dt * k3);
  if (!detail::all_finite(k1) || !detail::all_finite(k2) || !detail::all_finite(k3) || !detail::all_finite(k4)) {
    throw IntegrationFault("rk4_step: non-finite derivative");
  }
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Zero-order-hold variant: `cmd` is constant over the step.
template <class State, class Fn>
State rk4_step(Fn&& derivative, const State& x, const WheelCommand& cmd, const VehicleConfig& cfg, double dt) {
  return rk4_step([&](const State& s) -> State { return derivative(s, cmd, cfg); }, x, dt);
}

/// Closed-loop base model.
class BaseSimulator {
 public:
  BaseSimulator(const VehicleConfig& cfg, const DynState& initial) : cfg_(cfg), state_(initial) {}

  const DynState& state() const { return state_; }

  void step(const WheelCommand& cmd, double dt) {
    state_ = rk4_step([&](const DynState& s) { return base_derivative(s, cmd, cfg_); }, state_, dt);
  }

 private:
  VehicleConfig cfg_;
  DynState state_;
};

/// Closed-loop surrogate. The wheel-spin mode is stiff (|lambda| grows as r_w^2 * k / (v * I_w)),
/// so each outer step is split into `substeps` RK4 steps; load-transfer accelerations are
/// latched from the end of the previous substep.
class GtSimulator {
 public:
  static constexpr int kDefaultSubsteps = 20;

  GtSimulator(const VehicleConfig& cfg, const DynState& initial, int substeps = kDefaultSubsteps)
      : cfg_(cfg), state_(ExtendedState::rolling(initial, cfg)), substeps_(substeps) {
    if (substeps_ < 1) throw std::invalid_argument("GtSimulator: substeps must be >= 1");
  }

  const ExtendedState& state() const { return state_; }
  const LoadAccel& load_accel() const { return accel_; }

  void step(const WheelCommand& cmd, double dt) {
    const double h = dt / substeps_;
    for (int i = 0; i < substeps_; ++i) {
      state_ = rk4_step([&](const ExtendedState& x) { return gt_derivative(x, cmd, cfg_, accel_); }, state_, h);
      accel_ = gt_evaluate(state_, cmd, cfg_, accel_).accel;
    }
  }

 private:
  VehicleConfig cfg_;
  ExtendedState state_;
  LoadAccel accel_{};
  int substeps_;
};

}  // namespace resdyn

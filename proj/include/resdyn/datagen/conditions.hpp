// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "resdyn/vehicle/types.hpp"

namespace resdyn {

/// offset + amplitude * sin(2*pi*frequency*t + phase)
struct SineChannel {
  double amplitude = 0.0;
  double frequency = 0.0;  // Hz
  double phase = 0.0;      // rad
  double offset = 0.0;

  [[nodiscard]] double at(double t) const {
    return offset + amplitude * std::sin(2.0 * std::numbers::pi * frequency * t + phase);
  }
  [[nodiscard]] double peak() const { return std::abs(offset) + std::abs(amplitude); }
  friend bool operator==(const SineChannel&, const SineChannel&) = default;
};

/// One driving condition: a sine-wave control program plus its initial state.
struct ConditionSpec {
  std::string id;
  double duration = 20.0;  // s
  double dt = 0.01;        // s
  DynState initial_state{};
  SineChannel torque;       // per-wheel drive torque, N*m
  SineChannel front_steer;  // rad
  double rear_steer_ratio = 0.3;
  std::array<double, kNumWheels> torque_scale{1.0, 1.0, 1.0, 1.0};
  std::uint64_t seed = 0;

  friend bool operator==(const ConditionSpec&, const ConditionSpec&) = default;

  [[nodiscard]] std::size_t num_steps() const { return static_cast<std::size_t>(std::llround(duration / dt)); }
};

class InvalidCondition : public std::invalid_argument {
 public:
  InvalidCondition(const std::string& id, const std::string& channel, const std::string& why)
      : std::invalid_argument("condition '" + id + "': channel '" + channel + "' " + why), channel_(channel) {}
  const std::string& channel() const { return channel_; }

 private:
  std::string channel_;
};

inline void validate(const ConditionSpec& spec, double torque_max = kDefaultTorqueMax,
                     double steer_max = kDefaultSteerMax) {
  if (!(spec.duration > 0)) throw InvalidCondition(spec.id, "duration", "must be > 0");
  if (!(spec.dt > 0)) throw InvalidCondition(spec.id, "dt", "must be > 0");
  if (!spec.initial_state.finite()) throw InvalidCondition(spec.id, "initial_state", "must be finite");
  if (!(spec.torque.frequency >= 0)) throw InvalidCondition(spec.id, "torque", "frequency must be >= 0");
  if (!(spec.front_steer.frequency >= 0)) throw InvalidCondition(spec.id, "front_steer", "frequency must be >= 0");
  static constexpr const char* kTorqueNames[] = {"torque_FL", "torque_FR", "torque_RL", "torque_RR"};
  for (std::size_t w = 0; w < kNumWheels; ++w) {
    if (!(std::abs(spec.torque_scale[w]) * spec.torque.peak() <= torque_max)) {
      throw InvalidCondition(spec.id, kTorqueNames[w], "exceeds torque bound " + std::to_string(torque_max));
    }
  }
  if (!(spec.front_steer.peak() <= steer_max)) {
    throw InvalidCondition(spec.id, "front_steer", "exceeds steer bound " + std::to_string(steer_max));
  }
  if (!(std::abs(spec.rear_steer_ratio) * spec.front_steer.peak() <= steer_max)) {
    throw InvalidCondition(spec.id, "rear_steer", "exceeds steer bound " + std::to_string(steer_max));
  }
}

/// Command at a given time. Both wheels of an axle steer together; the rear axle steers
/// against the front.
inline WheelCommand command_at(const ConditionSpec& spec, double t) {
  WheelCommand cmd;
  const double torque = spec.torque.at(t);
  const double front = spec.front_steer.at(t);
  const double rear = -spec.rear_steer_ratio * front;
  for (std::size_t w = 0; w < kNumWheels; ++w) {
    cmd.torques[w] = spec.torque_scale[w] * torque;
    cmd.steers[w] = is_front(w) ? front : rear;
  }
  return cmd;
}

inline std::vector<WheelCommand> gen_controls(const ConditionSpec& spec) {
  validate(spec);
  const std::size_t n = spec.num_steps();
  std::vector<WheelCommand> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(command_at(spec, static_cast<double>(k) * spec.dt));
  return out;
}

inline nlohmann::json to_json(const SineChannel& c) {
  return {{"amplitude", c.amplitude}, {"frequency", c.frequency}, {"phase", c.phase}, {"offset", c.offset}};
}

inline SineChannel sine_from_json(const nlohmann::json& j) {
  return {j.at("amplitude").get<double>(), j.at("frequency").get<double>(), j.at("phase").get<double>(),
          j.at("offset").get<double>()};
}

inline nlohmann::json to_json(const ConditionSpec& s) {
  return {{"id", s.id},
          {"duration", s.duration},
          {"dt", s.dt},
          {"initial_state", {s.initial_state.v_x, s.initial_state.v_y, s.initial_state.w_z}},
          {"torque", to_json(s.torque)},
          {"front_steer", to_json(s.front_steer)},
          {"rear_steer_ratio", s.rear_steer_ratio},
          {"torque_scale", s.torque_scale},
          {"seed", s.seed}};
}

inline ConditionSpec condition_from_json(const nlohmann::json& j) {
  ConditionSpec s;
  s.id = j.at("id").get<std::string>();
  s.duration = j.at("duration").get<double>();
  s.dt = j.at("dt").get<double>();
  const auto& init = j.at("initial_state");
  s.initial_state = {init.at(0).get<double>(), init.at(1).get<double>(), init.at(2).get<double>()};
  s.torque = sine_from_json(j.at("torque"));
  s.front_steer = sine_from_json(j.at("front_steer"));
  s.rear_steer_ratio = j.at("rear_steer_ratio").get<double>();
  s.torque_scale = j.at("torque_scale").get<std::array<double, kNumWheels>>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

}  // namespace resdyn

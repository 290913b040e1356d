// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "resdyn/dytr/model.hpp"
#include "resdyn/dytr/normalization.hpp"

namespace resdyn {

inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Precision { F32, F64 };

/// Trained model plus everything needed to run it on raw records. Values are held in
/// double; an F32 checkpoint holds values that are exactly representable as float.
struct Checkpoint {
  DyTRConfig config;
  NormStats stats;
  Precision precision = Precision::F64;
  ModelParams<double> params;

  [[nodiscard]] std::size_t param_count() const { return params.count(); }

  template <class T>
  [[nodiscard]] ModelParams<T> params_as() const {
    return params.cast<T>();
  }
};

template <class T>
Checkpoint make_checkpoint(const DyTRConfig& cfg, const NormStats& stats, const ModelParams<T>& params) {
  Checkpoint c;
  c.config = cfg;
  c.stats = stats;
  c.precision = sizeof(T) == sizeof(float) ? Precision::F32 : Precision::F64;
  c.params = params.template cast<double>();
  return c;
}

inline nlohmann::json to_json(const Checkpoint& c) {
  nlohmann::json params = nlohmann::json::object();
  for (std::size_t i = 0; i < c.params.size(); ++i) {
    params[c.params.names()[i]] = {{"shape", c.params[i].shape}, {"values", c.params[i].data}};
  }
  return {{"version", kCheckpointVersion},
          {"config", to_json(c.config)},
          {"precision", c.precision == Precision::F32 ? "f32" : "f64"},
          {"normalization_stats", to_json(c.stats)},
          {"params", std::move(params)}};
}

/// Parameter names and shapes must match the layout implied by the stored config exactly.
inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " + j.at("version").dump());
    }
    Checkpoint c;
    c.config = dytr_config_from_json(j.at("config"));
    const auto prec = j.at("precision").get<std::string>();
    if (prec != "f32" && prec != "f64") throw CheckpointError("precision must be f32 or f64");
    c.precision = prec == "f32" ? Precision::F32 : Precision::F64;
    c.stats = norm_stats_from_json(j.at("normalization_stats"));
    c.params = init_params<double>(c.config, 0);
    const auto& jp = j.at("params");
    if (jp.size() != c.params.size()) {
      throw CheckpointError("checkpoint has " + std::to_string(jp.size()) + " tensors, config implies " +
                            std::to_string(c.params.size()));
    }
    for (std::size_t i = 0; i < c.params.size(); ++i) {
      const std::string& name = c.params.names()[i];
      auto it = jp.find(name);
      if (it == jp.end()) throw CheckpointError("checkpoint is missing tensor " + name);
      auto& t = c.params[i];
      if (it->at("shape").get<ad::Shape>() != t.shape) throw CheckpointError("shape mismatch for " + name);
      auto values = it->at("values").get<std::vector<double>>();
      if (values.size() != t.size()) throw CheckpointError("value count mismatch for " + name);
      t.data = std::move(values);
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out << to_json(c).dump() << '\n';
  if (!out) throw CheckpointError("write failed: " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read " + path.string());
  try {
    return checkpoint_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace resdyn

// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace resdyn {

inline constexpr std::size_t kStateDim = 3;
inline constexpr std::size_t kControlDim = 8;
inline constexpr std::size_t kConfigDim = 1;
inline constexpr std::size_t kStepDim = kStateDim + kControlDim;        // [s_i, u_i]
inline constexpr std::size_t kQueryInputDim = kStateDim + kConfigDim;   // [s_hat_{t+1}, c]

enum class ModelKind { DyTR, Mlp, MlpTrans };

inline std::string_view model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::DyTR: return "dytr";
    case ModelKind::Mlp: return "mlp";
    case ModelKind::MlpTrans: return "mlp-trans";
  }
  return "?";
}

inline ModelKind model_kind_from_name(std::string_view s) {
  if (s == "dytr") return ModelKind::DyTR;
  if (s == "mlp") return ModelKind::Mlp;
  if (s == "mlp-trans") return ModelKind::MlpTrans;
  throw std::invalid_argument("unknown model kind '" + std::string(s) + "' (dytr|mlp|mlp-trans)");
}

/// Which parts of [s_hat_{t+1}, c] reach the residual query. The removed part is zeroed,
/// so tensor shapes do not change.
enum class QueryMode { Full, A, B, C };  // A: neither, B: c only, C: s_hat_{t+1} only

inline std::string_view query_mode_name(QueryMode m) {
  switch (m) {
    case QueryMode::Full: return "full";
    case QueryMode::A: return "a";
    case QueryMode::B: return "b";
    case QueryMode::C: return "c";
  }
  return "?";
}

inline QueryMode query_mode_from_name(std::string_view s) {
  if (s == "full") return QueryMode::Full;
  if (s == "a") return QueryMode::A;
  if (s == "b") return QueryMode::B;
  if (s == "c") return QueryMode::C;
  throw std::invalid_argument("unknown query mode '" + std::string(s) + "' (full|a|b|c)");
}

enum class Activation { Relu, Gelu };

struct DyTRConfig {
  ModelKind kind = ModelKind::DyTR;
  std::size_t feature_dim = 64;  // C
  std::size_t seq_len = 15;      // T
  std::size_t depth = 2;         // D, shared by encoder and decoder
  std::size_t num_heads = 4;
  std::size_t ffn_dim = 0;       // 0 means 3 * C
  QueryMode query_mode = QueryMode::Full;
  Activation activation = Activation::Relu;

  /// Compares the resolved FFN width, so a config equals its own JSON round trip.
  friend bool operator==(const DyTRConfig& l, const DyTRConfig& r) {
    return l.kind == r.kind && l.feature_dim == r.feature_dim && l.seq_len == r.seq_len && l.depth == r.depth &&
           l.num_heads == r.num_heads && l.ffn() == r.ffn() && l.query_mode == r.query_mode &&
           l.activation == r.activation;
  }

  [[nodiscard]] std::size_t ffn() const { return ffn_dim == 0 ? 3 * feature_dim : ffn_dim; }
  /// Width of the per-step feature input: the baselines also see [s_hat_{t+1}, c] at every step.
  [[nodiscard]] std::size_t step_input_dim() const {
    return kind == ModelKind::DyTR ? kStepDim : kStepDim + kQueryInputDim;
  }

  void validate() const {
    auto require = [](bool ok, const std::string& what) {
      if (!ok) throw std::invalid_argument("invalid model config: " + what);
    };
    require(feature_dim > 0, "feature_dim must be > 0");
    require(num_heads > 0 && feature_dim % num_heads == 0, "feature_dim must be divisible by num_heads");
    require(seq_len >= 1, "seq_len must be >= 1");
    require(depth >= 1 || kind == ModelKind::Mlp, "depth must be >= 1");
  }
};

inline nlohmann::json to_json(const DyTRConfig& c) {
  return {{"model", model_kind_name(c.kind)},
          {"feature_dim", c.feature_dim},
          {"seq_len", c.seq_len},
          {"depth", c.depth},
          {"num_heads", c.num_heads},
          {"ffn_dim", c.ffn()},
          {"query_mode", query_mode_name(c.query_mode)},
          {"activation", c.activation == Activation::Relu ? "relu" : "gelu"}};
}

/// Missing keys keep the values in `base`; unknown keys are rejected.
inline DyTRConfig dytr_config_from_json(const nlohmann::json& j, DyTRConfig c = {}) {
  if (!j.is_object()) throw std::invalid_argument("model config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "model") {
      c.kind = model_kind_from_name(v.get<std::string>());
    } else if (key == "feature_dim") {
      c.feature_dim = v.get<std::size_t>();
    } else if (key == "seq_len") {
      c.seq_len = v.get<std::size_t>();
    } else if (key == "depth") {
      c.depth = v.get<std::size_t>();
    } else if (key == "num_heads") {
      c.num_heads = v.get<std::size_t>();
    } else if (key == "ffn_dim") {
      c.ffn_dim = v.get<std::size_t>();
    } else if (key == "query_mode") {
      c.query_mode = query_mode_from_name(v.get<std::string>());
    } else if (key == "activation") {
      const auto s = v.get<std::string>();
      if (s != "relu" && s != "gelu") throw std::invalid_argument("activation must be relu or gelu");
      c.activation = s == "relu" ? Activation::Relu : Activation::Gelu;
    } else {
      throw std::invalid_argument("model config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

}  // namespace resdyn

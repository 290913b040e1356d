// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "resdyn/evaluation/report.hpp"
#include "resdyn/training/trainer.hpp"

namespace resdyn {

enum class SweepVariable { SeqLen, Depth, QueryMode };

inline SweepVariable sweep_variable_from_name(std::string_view s) {
  if (s == "T" || s == "seq_len") return SweepVariable::SeqLen;
  if (s == "D" || s == "depth") return SweepVariable::Depth;
  if (s == "query_mode" || s == "mode") return SweepVariable::QueryMode;
  throw std::invalid_argument("unknown sweep variable '" + std::string(s) + "' (T|D|query_mode)");
}

inline std::string_view sweep_variable_name(SweepVariable v) {
  switch (v) {
    case SweepVariable::SeqLen: return "T";
    case SweepVariable::Depth: return "D";
    case SweepVariable::QueryMode: return "query_mode";
  }
  return "?";
}

struct AblationSpec {
  SweepVariable variable = SweepVariable::SeqLen;
  std::vector<std::string> values;
  DyTRConfig model;
  TrainConfig train;

  /// The model config of one sweep cell; throws on a value the variable cannot take.
  [[nodiscard]] DyTRConfig cell_config(const std::string& value) const {
    DyTRConfig c = model;
    switch (variable) {
      case SweepVariable::SeqLen: c.seq_len = std::stoul(value); break;
      case SweepVariable::Depth: c.depth = std::stoul(value); break;
      case SweepVariable::QueryMode: c.query_mode = query_mode_from_name(value); break;
    }
    c.validate();
    return c;
  }

  void validate() const {
    if (values.empty()) throw std::invalid_argument("ablation: sweep has no values");
    for (const auto& v : values) (void)cell_config(v);
  }
};

struct AblationCell {
  std::string value;
  std::optional<Checkpoint> checkpoint;
  std::string error;  // set when training failed; that cell has no report
};

struct AblationResult {
  std::vector<AblationCell> cells;
  std::vector<ModelReport> reports;  // one per successful cell, same target steps throughout
};

/// Trains one model per sweep value (same seed everywhere) and evaluates them together.
/// A failing cell is recorded and the rest of the table is still produced.
inline AblationResult ablate(const AblationSpec& spec, const Dataset& ds, const EpochHook& hook = {}) {
  spec.validate();
  AblationResult res;
  std::vector<std::pair<std::string, Checkpoint>> trained;
  for (const auto& v : spec.values) {
    AblationCell cell{v, std::nullopt, {}};
    try {
      auto tr = train(ds, spec.cell_config(v), spec.train, hook);
      cell.checkpoint = std::move(tr.final_checkpoint);
      trained.emplace_back(std::string(sweep_variable_name(spec.variable)) + "=" + v, *cell.checkpoint);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
    res.cells.push_back(std::move(cell));
  }
  if (!trained.empty()) res.reports = compare_models(trained, ds);
  return res;
}

}  // namespace resdyn

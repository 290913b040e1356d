// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "resdyn/evaluation/evaluate.hpp"

namespace resdyn {

inline constexpr std::string_view kReportCsvHeader = "model,params,split,state,mean_err,max_err,reduction_pct";
inline constexpr std::array<std::string_view, kStateDim> kStateNames{"v_x", "v_y", "w_z"};
inline constexpr std::string_view kBaseModelName = "base";

/// One model evaluated on the validation splits, with the base model on the same steps.
struct ModelReport {
  std::string model;
  std::size_t params = 0;
  std::map<Split, StateErrors> errors;
  std::map<Split, StateErrors> base;

  [[nodiscard]] std::array<double, kStateDim> reduction(Split s) const {
    return reduction_pct(errors.at(s).mean, base.at(s).mean);
  }
  /// Mean of the per-state reductions, the single summary figure.
  [[nodiscard]] double average_reduction(Split s) const { return average(reduction(s)); }
  [[nodiscard]] double relative_error(Split s) const { return relative_average_error(errors.at(s).mean, base.at(s).mean); }
};

struct ReportRow {
  std::string model;
  std::size_t params = 0;
  std::string split;
  std::string state;
  double mean_err = 0.0;
  double max_err = 0.0;
  double reduction_pct = 0.0;
  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

inline constexpr std::array<Split, 2> kEvalSplits{Split::Val1, Split::Val2};

/// Evaluates each checkpoint on val1 and val2. All models answer for the same target
/// steps: those reachable by the longest history among them.
inline std::vector<ModelReport> compare_models(const std::vector<std::pair<std::string, Checkpoint>>& models,
                                               const Dataset& ds) {
  std::size_t first_target = 0;
  for (const auto& [_, c] : models) first_target = std::max(first_target, c.config.seq_len);
  std::vector<ModelReport> out;
  for (const auto& [name, ckpt] : models) {
    ModelReport r;
    r.model = name;
    r.params = ckpt.param_count();
    for (Split s : kEvalSplits) {
      const auto windows = eval_windows(ds.runs(s), ckpt.config.seq_len, first_target);
      if (windows.empty()) throw std::invalid_argument("compare_models: split " + std::string(split_name(s)) + " has no windows");
      r.errors[s] = eval_windows_errors(checkpoint_predictor(ckpt), windows);
      r.base[s] = base_errors(windows);
    }
    out.push_back(std::move(r));
  }
  for (const auto& r : out) {
    for (Split s : kEvalSplits) {
      if (r.base.at(s) != out.front().base.at(s)) {
        throw std::logic_error("compare_models: models were evaluated on different target steps");
      }
    }
  }
  return out;
}

/// Flat rows: one base-model block per split, then one block per model and split.
inline std::vector<ReportRow> report_rows(const std::vector<ModelReport>& reports) {
  std::vector<ReportRow> rows;
  if (reports.empty()) return rows;
  for (Split s : kEvalSplits) {
    const auto& b = reports.front().base.at(s);
    for (std::size_t i = 0; i < kStateDim; ++i) {
      rows.push_back({std::string(kBaseModelName), 0, std::string(split_name(s)), std::string(kStateNames[i]), b.mean[i], b.max[i], 0.0});
    }
  }
  for (const auto& r : reports) {
    for (Split s : kEvalSplits) {
      const auto red = r.reduction(s);
      const auto& e = r.errors.at(s);
      for (std::size_t i = 0; i < kStateDim; ++i) {
        rows.push_back({r.model, r.params, std::string(split_name(s)), std::string(kStateNames[i]), e.mean[i], e.max[i], red[i]});
      }
    }
  }
  return rows;
}

inline nlohmann::json to_json(const ReportRow& r) {
  return {{"model", r.model},       {"params", r.params},   {"split", r.split},
          {"state", r.state},       {"mean_err", r.mean_err}, {"max_err", r.max_err},
          {"reduction_pct", r.reduction_pct}};
}

inline nlohmann::json rows_to_json(const std::vector<ReportRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) j.push_back(to_json(r));
  return j;
}

inline std::string rows_to_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << kReportCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.model << ',' << r.params << ',' << r.split << ',' << r.state << ',' << format_double(r.mean_err) << ','
        << format_double(r.max_err) << ',' << format_double(r.reduction_pct) << '\n';
  }
  return out.str();
}

inline std::vector<ReportRow> rows_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kReportCsvHeader) throw DatasetIoError("report CSV: unexpected header");
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 7) throw DatasetIoError("report CSV: expected 7 fields in '" + line + "'");
    rows.push_back({f[0], static_cast<std::size_t>(std::stoull(f[1])), f[2], f[3], parse_double(f[4], "mean_err"),
                    parse_double(f[5], "max_err"), parse_double(f[6], "reduction_pct")});
  }
  return rows;
}

/// Writes <stem>.csv and <stem>.json.
inline void export_report(const std::vector<ReportRow>& rows, const std::filesystem::path& stem) {
  auto write = [](const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DatasetIoError("cannot write " + p.string());
    out << s;
    if (!out) throw DatasetIoError("write failed: " + p.string());
  };
  auto base = stem;
  write(base.replace_extension(".csv"), rows_to_csv(rows));
  write(base.replace_extension(".json"), rows_to_json(rows).dump(2) + "\n");
}

}  // namespace resdyn

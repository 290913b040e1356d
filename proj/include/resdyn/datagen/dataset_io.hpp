// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "resdyn/datagen/cosim.hpp"
#include "resdyn/datagen/splits.hpp"

namespace resdyn {

inline constexpr std::string_view kDatasetCsvHeader =
    "cond,step,t,T1,T2,T3,T4,st1,st2,st3,st4,vx_hat,vy_hat,wz_hat,vx_gt,vy_gt,wz_gt,mass";

class DatasetIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Records of one (condition, mass) run, contiguous in step.
struct Run {
  std::string condition_id;
  double mass = 0.0;
  std::vector<DatasetRecord> records;
  friend bool operator==(const Run&, const Run&) = default;
};

struct Dataset {
  SplitManifest manifest;
  std::vector<Run> train, val1, val2;

  std::vector<Run>& runs(Split s) { return s == Split::Train ? train : (s == Split::Val1 ? val1 : val2); }
  const std::vector<Run>& runs(Split s) const { return s == Split::Train ? train : (s == Split::Val1 ? val1 : val2); }

  const Run* find(const std::string& condition_id, double mass) const {
    for (Split s : kAllSplits) {
      for (const auto& r : runs(s)) {
        if (r.condition_id == condition_id && r.mass == mass) return &r;
      }
    }
    return nullptr;
  }
};

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
  // std::from_chars for double is missing in some libstdc++ builds; strtod is exact for round trips.
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size()) throw DatasetIoError(context + ": bad number '" + tmp + "'");
  return v;
}

inline std::string run_file_name(const std::string& condition_id, double mass) {
  return condition_id + "_m" + format_double(mass) + ".csv";
}

inline void write_run_csv(const Run& run, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetIoError("cannot write " + path.string());
  out << kDatasetCsvHeader << '\n';
  for (const auto& r : run.records) {
    if (r.condition_id.find_first_of(",\n\"") != std::string::npos) {
      throw DatasetIoError("condition id '" + r.condition_id + "' contains a CSV delimiter");
    }
    out << r.condition_id << ',' << r.step << ',' << format_double(r.t);
    for (double v : r.u.torques) out << ',' << format_double(v);
    for (double v : r.u.steers) out << ',' << format_double(v);
    for (const DynState* s : {&r.s_hat, &r.s_gt}) {
      out << ',' << format_double(s->v_x) << ',' << format_double(s->v_y) << ',' << format_double(s->w_z);
    }
    out << ',' << format_double(r.mass) << '\n';
  }
  if (!out) throw DatasetIoError("write failed: " + path.string());
}

inline Run read_run_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetIoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kDatasetCsvHeader) {
    throw DatasetIoError(path.string() + ": unexpected CSV header");
  }
  Run run;
  std::vector<std::string_view> fields;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    fields.clear();
    std::string_view sv(line);
    for (std::size_t start = 0;;) {
      const auto pos = sv.find(',', start);
      fields.push_back(sv.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    const std::string ctx = path.string() + ":" + std::to_string(lineno);
    if (fields.size() != 18) throw DatasetIoError(ctx + ": expected 18 fields");
    DatasetRecord r;
    r.condition_id = std::string(fields[0]);
    r.step = static_cast<std::size_t>(parse_double(fields[1], ctx));
    r.t = parse_double(fields[2], ctx);
    for (std::size_t w = 0; w < kNumWheels; ++w) {
      r.u.torques[w] = parse_double(fields[3 + w], ctx);
      r.u.steers[w] = parse_double(fields[7 + w], ctx);
    }
    r.s_hat = {parse_double(fields[11], ctx), parse_double(fields[12], ctx), parse_double(fields[13], ctx)};
    r.s_gt = {parse_double(fields[14], ctx), parse_double(fields[15], ctx), parse_double(fields[16], ctx)};
    r.mass = parse_double(fields[17], ctx);
    if (!run.records.empty() && r.step != run.records.back().step + 1) {
      throw DatasetIoError(ctx + ": steps are not contiguous");
    }
    run.records.push_back(std::move(r));
  }
  if (!run.records.empty()) {
    run.condition_id = run.records.front().condition_id;
    run.mass = run.records.front().mass;
  }
  return run;
}

/// Writes one CSV per run plus manifest.json; fills in the manifest's file names.
inline SplitManifest write_dataset(const Dataset& ds, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DatasetIoError("cannot create " + out_dir.string() + ": " + ec.message());
  SplitManifest manifest = ds.manifest;
  for (Split s : kAllSplits) {
    auto& entries = manifest.entries(s);
    const auto& runs = ds.runs(s);
    if (entries.size() != runs.size()) throw DatasetIoError("manifest/run count mismatch in split " + std::string(split_name(s)));
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (entries[i].condition_id != runs[i].condition_id || entries[i].mass != runs[i].mass) {
        throw DatasetIoError("manifest entry does not match run " + runs[i].condition_id);
      }
      entries[i].file = run_file_name(runs[i].condition_id, runs[i].mass);
      write_run_csv(runs[i], out_dir / entries[i].file);
    }
  }
  const auto manifest_path = out_dir / "manifest.json";
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw DatasetIoError("cannot write " + manifest_path.string());
  out << to_json(manifest).dump(2) << '\n';
  if (!out) throw DatasetIoError("write failed: " + manifest_path.string());
  return manifest;
}

inline SplitManifest read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw DatasetIoError("cannot read " + path.string());
  try {
    return manifest_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DatasetIoError(path.string() + ": " + e.what());
  }
}

inline Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.manifest = read_manifest(dir);
  for (Split s : kAllSplits) {
    for (const auto& e : ds.manifest.entries(s)) {
      Run run = read_run_csv(dir / e.file);
      if (run.records.empty()) {
        run.condition_id = e.condition_id;
        run.mass = e.mass;
      }
      if (run.condition_id != e.condition_id || run.mass != e.mass) {
        throw DatasetIoError(e.file + ": contents do not match manifest entry");
      }
      ds.runs(s).push_back(std::move(run));
    }
  }
  return ds;
}

}  // namespace resdyn

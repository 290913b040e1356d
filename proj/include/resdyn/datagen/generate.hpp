// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "resdyn/common/parallel.hpp"
#include "resdyn/common/rng.hpp"
#include "resdyn/datagen/dataset_io.hpp"
#include "resdyn/datagen/splits.hpp"

namespace resdyn {

struct GenerationOptions {
  SplitRecipe recipe = SplitRecipe::desk();
  ConditionRanges ranges{};
  VehicleConfig vehicle{};
  CosimOptions cosim{};
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  double max_reject_fraction = 0.5;
};

struct Rejection {
  std::string condition_id;
  double mass = 0.0;
  FilterVerdict verdict;
};

struct GenerationReport {
  std::size_t candidates = 0;
  std::vector<Rejection> rejections;  // one per rejected candidate (first failing mass)
};

class GenerationError : public std::runtime_error {
 public:
  GenerationError(const std::string& what, GenerationReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const GenerationReport& report() const { return report_; }

 private:
  GenerationReport report_;
};

inline std::string condition_id(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "c%03zu", index);
  return buf;
}

/// Draws candidate conditions in seed order, co-simulates each at every mass its role needs,
/// and keeps the first ones the stability filter accepts at all of those masses.
inline Dataset generate_dataset(const GenerationOptions& opt, GenerationReport* report_out = nullptr) {
  const SplitRecipe& recipe = opt.recipe;
  const std::size_t needed = recipe.pool_size();
  const std::size_t max_candidates = needed * 4 + 8;

  std::vector<double> masses = recipe.train_masses;
  masses.push_back(recipe.val1_mass);
  const std::size_t val2_mass_index = [&] {
    for (std::size_t i = 0; i < masses.size(); ++i) {
      if (masses[i] == recipe.val2_mass) return i;
    }
    masses.push_back(recipe.val2_mass);
    return masses.size() - 1;
  }();

  struct Candidate {
    ConditionSpec spec;
    std::vector<CosimResult> runs;  // indexed like `masses`
  };

  GenerationReport report;
  std::vector<Candidate> accepted_train, accepted_val2;
  const std::size_t batch = opt.jobs > 0 ? opt.jobs : 1;
  std::size_t next_index = 0;

  while (accepted_train.size() < recipe.train_conditions || accepted_val2.size() < recipe.val2_conditions) {
    if (next_index >= max_candidates) break;
    const std::size_t count = std::min(batch, max_candidates - next_index);
    std::vector<Candidate> cands(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t idx = next_index + i;
      Rng rng = Rng::derived(opt.seed, idx);
      cands[i].spec = draw_condition(rng, condition_id(idx), opt.seed, opt.ranges);
      cands[i].runs.resize(masses.size());
    }
    parallel_for(count * masses.size(), opt.jobs, [&](std::size_t job) {
      Candidate& c = cands[job / masses.size()];
      const std::size_t mi = job % masses.size();
      c.runs[mi] = cosim_run(c.spec, masses[mi], opt.vehicle, opt.cosim);
    });
    next_index += count;

    for (auto& c : cands) {
      ++report.candidates;
      const bool train_role = accepted_train.size() < recipe.train_conditions;
      if (!train_role && accepted_val2.size() >= recipe.val2_conditions) break;
      std::vector<std::size_t> role_masses;
      if (train_role) {
        for (std::size_t i = 0; i <= recipe.train_masses.size(); ++i) role_masses.push_back(i);
      } else {
        role_masses.push_back(val2_mass_index);
      }
      const Rejection* reject = nullptr;
      Rejection r;
      for (std::size_t mi : role_masses) {
        if (!c.runs[mi].accepted()) {
          r = {c.spec.id, masses[mi], c.runs[mi].verdict};
          reject = &r;
          break;
        }
      }
      if (reject != nullptr) {
        report.rejections.push_back(*reject);
        continue;
      }
      (train_role ? accepted_train : accepted_val2).push_back(std::move(c));
    }
  }

  if (report_out != nullptr) *report_out = report;
  const double reject_fraction =
      report.candidates == 0 ? 0.0 : static_cast<double>(report.rejections.size()) / report.candidates;
  if (accepted_train.size() < recipe.train_conditions || accepted_val2.size() < recipe.val2_conditions ||
      reject_fraction > opt.max_reject_fraction) {
    std::string msg = "stability filter rejected " + std::to_string(report.rejections.size()) + " of " +
                      std::to_string(report.candidates) + " candidate conditions";
    for (const auto& rej : report.rejections) {
      msg += "\n  " + rej.condition_id + " @ " + format_double(rej.mass) + " kg, step " +
             std::to_string(rej.verdict.step) + ": " + rej.verdict.reason;
    }
    throw GenerationError(msg, report);
  }

  std::vector<std::string> pool;
  std::vector<ConditionSpec> specs;
  for (const auto* group : {&accepted_train, &accepted_val2}) {
    for (const auto& c : *group) {
      pool.push_back(c.spec.id);
      specs.push_back(c.spec);
    }
  }

  Dataset ds;
  ds.manifest = build_splits(pool, recipe);
  ds.manifest.seed = opt.seed;
  ds.manifest.dt = opt.ranges.dt;
  ds.manifest.filter_bounds = opt.cosim.bounds;
  ds.manifest.conditions = specs;

  auto find_run = [&](const std::string& id, double mass) -> Run {
    for (const auto* group : {&accepted_train, &accepted_val2}) {
      for (const auto& c : *group) {
        if (c.spec.id != id) continue;
        for (std::size_t mi = 0; mi < masses.size(); ++mi) {
          if (masses[mi] == mass) return Run{id, mass, c.runs[mi].records};
        }
      }
    }
    throw std::logic_error("generate_dataset: missing run " + id);
  };
  for (Split s : kAllSplits) {
    for (const auto& e : ds.manifest.entries(s)) ds.runs(s).push_back(find_run(e.condition_id, e.mass));
  }
  check_split_invariants(ds.manifest);
  return ds;
}

}  // namespace resdyn

// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "resdyn/datagen/generate.hpp"

using namespace resdyn;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("resdyn_datagen_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

GenerationOptions small_options(std::uint64_t seed = 3) {
  GenerationOptions o;
  o.seed = seed;
  o.recipe.train_conditions = 2;
  o.recipe.train_masses = {1800.0, 2200.0};
  o.recipe.val2_conditions = 1;
  o.ranges.duration = 1.0;
  return o;
}

}  // namespace

TEST(Controls, ZeroProgramIsZeroCommand) {
  ConditionSpec s;
  s.duration = 1.0;
  for (const auto& c : gen_controls(s)) EXPECT_EQ(c, WheelCommand{});
  EXPECT_EQ(gen_controls(s).size(), 100u);
}

TEST(Controls, RearSteersAgainstFront) {
  ConditionSpec s;
  s.duration = 2.0;
  s.front_steer = {0.1, 0.7, 0.3, 0.0};
  for (const auto& c : gen_controls(s)) {
    EXPECT_EQ(c.steers[0], c.steers[1]);
    EXPECT_EQ(c.steers[2], c.steers[3]);
    EXPECT_NEAR(c.steers[2], -0.3 * c.steers[0], 1e-16);
  }
}

TEST(Controls, SineValueAtStepFifty) {
  ConditionSpec s;
  s.duration = 10.0;
  s.torque = {200.0, 0.5, 0.4, 50.0};
  const auto u = gen_controls(s);
  const double expect = 50.0 + 200.0 * std::sin(2 * std::numbers::pi * 0.5 * 0.5 + 0.4);
  for (double t : u[50].torques) EXPECT_NEAR(t, expect, 1e-12);
}

TEST(Controls, PerWheelScaling) {
  ConditionSpec s;
  s.torque.offset = 100.0;
  s.torque_scale = {1.0, 1.0, 0.5, 0.0};
  const auto u = command_at(s, 0.0);
  EXPECT_EQ(u.torques[2], 50.0);
  EXPECT_EQ(u.torques[3], 0.0);
}

TEST(Controls, BoundViolationNamesChannel) {
  ConditionSpec s;
  s.front_steer.amplitude = 0.6;
  try {
    gen_controls(s);
    FAIL() << "expected rejection";
  } catch (const InvalidCondition& e) {
    EXPECT_EQ(e.channel(), "front_steer");
  }
  ConditionSpec t;
  t.torque = {1000.0, 0.1, 0.0, 600.0};
  EXPECT_THROW(gen_controls(t), InvalidCondition);
}

TEST(Cosim, ZeroControlFromRestStaysAtRest) {
  ConditionSpec s;
  s.duration = 2.0;
  const auto r = cosim_run(s, 2000.0, VehicleConfig{});
  ASSERT_TRUE(r.accepted());
  for (const auto& rec : r.records) {
    EXPECT_EQ(rec.s_hat, DynState{});
    EXPECT_EQ(rec.s_gt, DynState{});
    EXPECT_EQ(rec.residual(), DynState{});
  }
}

TEST(Cosim, GentleStraightTorqueAgreesLongitudinally) {
  VehicleConfig cfg;
  cfg.f_r = 0;
  cfg.c_d = 0;
  cfg.I_w = 0.01;  // wheel spin-up would otherwise absorb part of the torque
  ConditionSpec s;
  s.duration = 1.0;
  s.initial_state = {10, 0, 0};
  s.torque.offset = 20.0;
  const auto r = cosim_run(s, 2000.0, cfg);
  ASSERT_TRUE(r.accepted());
  const double ideal_gain = 4 * 20.0 / (cfg.r_w * 2000.0);
  for (const auto& rec : r.records) {
    EXPECT_LT(std::abs(rec.residual().v_x), 1e-3) << rec.step;
    EXPECT_NEAR(rec.s_hat.v_x, 10 + ideal_gain * rec.t, 1e-10);
  }
}

TEST(Cosim, StraightTorqueMatchesRotatingMassClosedForm) {
  // With spin inertia the surrogate accelerates as if its mass were m + 4 I_w / r_w^2.
  VehicleConfig cfg;
  cfg.f_r = 0;
  cfg.c_d = 0;
  ConditionSpec s;
  s.duration = 1.0;
  s.initial_state = {10, 0, 0};
  s.torque.offset = 20.0;
  const auto r = cosim_run(s, 2000.0, cfg);
  ASSERT_TRUE(r.accepted());
  const double m_eff = 2000.0 + 4 * cfg.I_w / (cfg.r_w * cfg.r_w);
  const double gain = 4 * 20.0 / (cfg.r_w * m_eff);
  for (const auto& rec : r.records) EXPECT_NEAR(rec.s_gt.v_x, 10 + gain * rec.t, 2e-4) << rec.step;
}

TEST(Cosim, SteeringCreatesLateralResidual) {
  ConditionSpec s;
  s.duration = 3.0;
  s.initial_state = {15, 0, 0};
  s.front_steer = {0.05, 0.3, 0.0, 0.0};
  const auto r = cosim_run(s, 2000.0, VehicleConfig{});
  ASSERT_TRUE(r.accepted());
  double mean = 0;
  for (const auto& rec : r.records) mean += std::abs(rec.residual().v_y) / static_cast<double>(r.records.size());
  EXPECT_GT(mean, 1e-4);
}

TEST(Cosim, RecordsAreContiguousAndCarryMass) {
  ConditionSpec s;
  s.id = "x";
  s.duration = 0.5;
  s.initial_state = {12, 0, 0};
  const auto r = cosim_run(s, 1900.0, VehicleConfig{});
  for (std::size_t k = 0; k < r.records.size(); ++k) {
    EXPECT_EQ(r.records[k].step, k);
    EXPECT_EQ(r.records[k].mass, 1900.0);
    EXPECT_EQ(r.records[k].condition_id, "x");
  }
}

TEST(Cosim, GeometryMismatchRejected) {
  VehicleConfig a, b;
  b.a = 1.3;
  EXPECT_THROW(cosim_run(ConditionSpec{}, 2000.0, a, b), std::invalid_argument);
}

TEST(Filter, Cases) {
  std::vector<DatasetRecord> recs(3);
  EXPECT_TRUE(stability_filter(recs).accepted);
  recs[1].s_gt.v_y = 6.0;
  const auto v = stability_filter(recs);
  EXPECT_FALSE(v.accepted);
  EXPECT_EQ(v.step, 0u);  // steps were default-initialized
  recs[1].s_gt.v_y = 0.0;
  recs[2].s_hat.w_z = std::nan("");
  EXPECT_FALSE(stability_filter(recs).accepted);
  recs[2].s_hat.w_z = 0;
  recs[0].s_hat.v_x = 46;
  EXPECT_FALSE(stability_filter(recs).accepted);
}

TEST(Filter, SpinningVehicleRejectedByCosim) {
  ConditionSpec s;
  s.duration = 10.0;
  s.initial_state = {30, 0, 0};
  s.front_steer = {0.0, 0.0, 0.0, 0.45};
  s.rear_steer_ratio = 1.0;
  EXPECT_FALSE(cosim_run(s, 2000.0, VehicleConfig{}).accepted());
}

TEST(Splits, DeskRecipeCountsAndHygiene) {
  std::vector<std::string> pool;
  for (int i = 0; i < 12; ++i) pool.push_back(condition_id(i));
  const auto m = build_splits(pool, SplitRecipe::desk());
  EXPECT_EQ(m.train.size(), 24u);
  EXPECT_EQ(m.val1.size(), 8u);
  EXPECT_EQ(m.val2.size(), 4u);
  EXPECT_NO_THROW(check_split_invariants(m));
  std::set<std::string> train_ids;
  std::set<double> train_masses;
  for (const auto& e : m.train) {
    train_ids.insert(e.condition_id);
    train_masses.insert(e.mass);
  }
  for (const auto& e : m.val1) {
    EXPECT_TRUE(train_ids.count(e.condition_id));
    EXPECT_FALSE(train_masses.count(e.mass));
  }
  for (const auto& e : m.val2) {
    EXPECT_FALSE(train_ids.count(e.condition_id));
    EXPECT_FALSE(train_masses.count(e.mass));
  }
}

TEST(Splits, LargeRecipeCounts) {
  std::vector<std::string> pool;
  for (int i = 0; i < 56; ++i) pool.push_back(condition_id(i));
  const auto m = build_splits(pool, SplitRecipe::paper());
  EXPECT_EQ(m.train.size(), 252u);
  EXPECT_EQ(m.val1.size(), 28u);
  EXPECT_EQ(m.val2.size(), 28u);
  EXPECT_NO_THROW(check_split_invariants(m));
}

TEST(Splits, UnsatisfiableRecipesThrow) {
  EXPECT_THROW(build_splits({}, SplitRecipe::desk()), std::invalid_argument);
  EXPECT_THROW(build_splits({"a", "b"}, SplitRecipe::desk()), std::invalid_argument);
  SplitRecipe r = SplitRecipe::desk();
  r.val1_mass = 2000.0;
  std::vector<std::string> pool;
  for (int i = 0; i < 12; ++i) pool.push_back(condition_id(i));
  EXPECT_THROW(build_splits(pool, r), std::invalid_argument);
}

TEST(Splits, InvariantCheckCatchesLeak) {
  std::vector<std::string> pool;
  for (int i = 0; i < 12; ++i) pool.push_back(condition_id(i));
  auto m = build_splits(pool, SplitRecipe::desk());
  m.val2.push_back(m.train.front());
  EXPECT_THROW(check_split_invariants(m), std::exception);
}

TEST(DatasetIo, CsvRoundTripIsExact) {
  ConditionSpec s;
  s.id = "c007";
  s.duration = 1.0;
  s.initial_state = {14, 0, 0};
  s.torque = {120.0, 0.3, 1.0, 40.0};
  s.front_steer = {0.04, 0.2, 0.5, 0.0};
  const auto r = cosim_run(s, 2100.0, VehicleConfig{});
  ASSERT_TRUE(r.accepted());
  resdyn::Run run{s.id, 2100.0, r.records};
  const auto dir = temp_dir("csv");
  write_run_csv(run, dir / "run.csv");
  EXPECT_EQ(read_run_csv(dir / "run.csv"), run);
  std::ifstream in(dir / "run.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, kDatasetCsvHeader);
}

TEST(DatasetIo, MalformedCsvReportsPath) {
  const auto dir = temp_dir("bad");
  std::ofstream(dir / "bad.csv") << kDatasetCsvHeader << "\nc000,0,0,oops\n";
  try {
    read_run_csv(dir / "bad.csv");
    FAIL();
  } catch (const DatasetIoError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.csv"), std::string::npos);
  }
}

TEST(Generate, ManifestListsEveryFileAndRoundTrips) {
  const auto ds = generate_dataset(small_options());
  const auto dir = temp_dir("gen");
  const auto m = write_dataset(ds, dir);
  for (Split s : kAllSplits) {
    for (const auto& e : m.entries(s)) EXPECT_TRUE(fs::exists(dir / e.file)) << e.file;
  }
  const auto back = read_dataset(dir);
  EXPECT_EQ(back.manifest, m);
  for (Split s : kAllSplits) EXPECT_EQ(back.runs(s), ds.runs(s));
}

TEST(Generate, SameSeedSameBytesAnyWorkerCount) {
  auto opt = small_options(11);
  const auto a = temp_dir("det_a"), b = temp_dir("det_b");
  write_dataset(generate_dataset(opt), a);
  opt.jobs = 3;
  write_dataset(generate_dataset(opt), b);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path();
    ++files;
  }
  EXPECT_EQ(files, 4u + 2u + 1u + 1u);  // runs of each split plus the manifest
}

TEST(Generate, DifferentSeedsDiffer) {
  EXPECT_NE(generate_dataset(small_options(1)).train, generate_dataset(small_options(2)).train);
}

TEST(Generate, TooManyRejectionsAbort) {
  auto opt = small_options();
  opt.cosim.bounds.v_x_max = 1.0;  // every run starts above this
  EXPECT_THROW(generate_dataset(opt), GenerationError);
}

TEST(Generate, ResidualsFiniteEverywhere) {
  const auto ds = generate_dataset(small_options(5));
  for (Split s : kAllSplits) {
    for (const auto& run : ds.runs(s)) {
      for (const auto& r : run.records) EXPECT_TRUE(r.residual().finite());
    }
  }
}

// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "resdyn/training/trainer.hpp"

using namespace resdyn;
using resdyn::testing::fixture_run;
using Runs = std::vector<resdyn::Run>;

namespace {

DyTRConfig tiny_model(ModelKind kind = ModelKind::DyTR) {
  DyTRConfig c;
  c.kind = kind;
  c.feature_dim = 16;
  c.seq_len = 5;
  c.depth = 1;
  return c;
}

TrainConfig quick_train(std::size_t epochs = 3) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 32;
  return t;
}

}  // namespace

TEST(WeightedLoss, ExactCorrectionIsZero) {
  const DynState s_hat{10, 0.2, 0.01}, s_gt{10.3, 0.1, 0.02};
  EXPECT_EQ(weighted_loss(s_gt - s_hat, s_hat, s_gt), 0.0);
}

TEST(WeightedLoss, YawErrorWeightedByThousand) {
  for (double e : {0.003, 0.5, 2.0}) {
    EXPECT_DOUBLE_EQ(weighted_loss({0, 0, e}, {}, {}), 1000 * ad::smooth_l1_value(e, 1.0));
  }
}

TEST(WeightedLoss, HalfUnitLongitudinalError) { EXPECT_DOUBLE_EQ(weighted_loss({0.5, 0, 0}, {}, {}), 0.125); }

TEST(WeightedLoss, YawDominatesForEqualNormalizedErrors) {
  const double e = 0.3;
  const double vx = weighted_loss({e, 0, 0}, {}, {});
  const double vy = weighted_loss({0, e, 0}, {}, {});
  const double wz = weighted_loss({0, 0, e}, {}, {});
  EXPECT_GT(wz, vy);
  EXPECT_GT(vy, vx);
  EXPECT_GT(wz, 0.9 * weighted_loss({e, e, e}, {}, {}));
}

TEST(WeightedLoss, TensorFormMatchesScalarForm) {
  Rng rng(1);
  std::vector<double> pred(12), target(12);
  for (std::size_t i = 0; i < 12; ++i) {
    pred[i] = rng.uniform(-2, 2);
    target[i] = rng.uniform(-2, 2);
  }
  ad::Tape<double> t;
  const double got = weighted_loss(t.constant({4, 3}, pred), t.constant({4, 3}, target), kDefaultLossWeights, 1.0).item();
  double expect = 0;
  for (std::size_t b = 0; b < 4; ++b) {
    expect += weighted_loss({pred[b * 3], pred[b * 3 + 1], pred[b * 3 + 2]}, {},
                            {target[b * 3], target[b * 3 + 1], target[b * 3 + 2]}) / 4;
  }
  EXPECT_NEAR(got, expect, 1e-12);
  EXPECT_GE(got, 0.0);
}

TEST(Adam, ZeroGradientNoDecayLeavesParams) {
  ModelParams<double> p;
  p.add("x", {3}, 0.7);
  p[0].grad.assign(3, 0.0);
  AdamState<double> st(p);
  for (int i = 0; i < 5; ++i) adam_step(p, st, {1e-2, 0.0});
  for (double v : p[0].data) EXPECT_EQ(v, 0.7);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ModelParams<double> p;
  p.add("x", {1}, 2.0);
  p[0].grad = {1.0};
  AdamState<double> st(p);
  adam_step(p, st, {1e-3, 0.0});
  // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps).
  EXPECT_NEAR(2.0 - p[0].data[0], 1e-3 / (1 + 1e-8), 1e-15);
}

TEST(Adam, DecoupledDecayBeforeStep) {
  ModelParams<double> p;
  p.add("x", {1}, 2.0);
  p[0].grad = {0.0};
  AdamState<double> st(p);
  adam_step(p, st, {0.1, 0.5});
  EXPECT_NEAR(p[0].data[0], 2.0 * (1 - 0.1 * 0.5), 1e-15);
}

TEST(Adam, QuadraticLossDecreasesMonotonically) {
  ModelParams<double> p;
  p.add("x", {2}, 0.0);
  p[0].data = {3.0, -2.0};
  AdamState<double> st(p);
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    const double loss = p[0].data[0] * p[0].data[0] + 4 * p[0].data[1] * p[0].data[1];
    EXPECT_LT(loss, prev);
    prev = loss;
    p[0].grad = {2 * p[0].data[0], 8 * p[0].data[1]};
    adam_step(p, st, {0.01, 0.0});
  }
}

TEST(Adam, StateMismatchThrows) {
  ModelParams<double> p;
  p.add("x", {2});
  AdamState<double> st;
  EXPECT_THROW(adam_step(p, st, {}), std::invalid_argument);
}

TEST(Windows, CountsAndSkips) {
  Runs runs{fixture_run("a", 2000, 6), fixture_run("b", 2000, 30), fixture_run("c", 2000, 5)};
  const auto w = make_windows(runs, 5);
  EXPECT_EQ(w.windows.size(), 1u + 25u);
  EXPECT_EQ(w.skipped_runs, 1u);
  EXPECT_THROW(make_windows(runs, 0), std::invalid_argument);
}

TEST(Windows, NeverSpanRuns) {
  Runs runs{fixture_run("a", 1800, 20, 1), fixture_run("b", 2200, 20, 2)};
  const std::size_t T = 5;
  for (const auto& w : make_windows(runs, T).windows) {
    ASSERT_GE(w.t + 1, T);
    ASSERT_LT(w.t + 1, w.run->records.size());
    for (std::size_t k = w.t + 1 - T; k <= w.t + 1; ++k) EXPECT_EQ(w.run->records[k].condition_id, w.run->condition_id);
  }
}

TEST(Windows, BatchLayoutMatchesRecords) {
  Runs runs{fixture_run("a", 2000, 12, 3)};
  const auto cfg = tiny_model();
  NormStats st;  // identity normalization
  const auto ws = make_windows(runs, cfg.seq_len).windows;
  const auto b = make_batch<double>(std::span(ws).subspan(2, 1), cfg, st);
  const Window& w = ws[2];
  const auto& first = w.run->records[w.t + 1 - cfg.seq_len];
  EXPECT_EQ(b.steps[0], first.s_hat.v_x);
  EXPECT_EQ(b.steps[3], first.u.torques[0]);
  EXPECT_EQ(b.steps[7], first.u.steers[0]);
  EXPECT_EQ(b.next[1], w.next().s_hat.v_y);
  EXPECT_EQ(b.config[0], 2000.0);
  const auto tg = make_targets<double>(std::span(ws).subspan(2, 1), st);
  EXPECT_EQ(tg[2], w.next().residual().w_z);
}

TEST(Windows, BaselineStepsCarryQueryContext) {
  Runs runs{fixture_run("a", 2000, 12, 3)};
  const auto cfg = tiny_model(ModelKind::MlpTrans);
  const auto ws = make_windows(runs, cfg.seq_len).windows;
  const auto b = make_batch<double>(std::span(ws).first(1), cfg, NormStats{});
  ASSERT_EQ(b.step_dim, 15u);
  for (std::size_t k = 0; k < cfg.seq_len; ++k) {
    EXPECT_EQ(b.steps[k * 15 + 11], ws[0].next().s_hat.v_x);
    EXPECT_EQ(b.steps[k * 15 + 14], 2000.0);
  }
}

TEST(NormStatsTest, ResidualIsScaledNotShifted) {
  Runs runs{fixture_run("a", 1800, 200, 1), fixture_run("b", 2200, 200, 2)};
  const auto st = compute_norm_stats(runs);
  for (double s : st.residual_std) EXPECT_GT(s, 0.0);
  const auto ws = make_windows(runs, 3).windows;
  const auto tg = make_targets<double>(ws, st);
  for (std::size_t i = 0; i < ws.size(); ++i) EXPECT_EQ(tg[i * 3 + 1], ws[i].next().residual().v_y / st.residual_std[1]);
  EXPECT_EQ(norm_stats_from_json(to_json(st)), st);
}

TEST(Training, OverfitsSixtyFourWindows) {
  DyTRConfig cfg;
  cfg.feature_dim = 32;
  Runs runs{fixture_run("a", 2000, cfg.seq_len + 64, 7)};
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 64;
  const auto res = train(runs, nullptr, cfg, tc);
  ASSERT_EQ(res.train_windows, 64u);
  const double initial = res.history.front().train_loss, final_loss = res.history.back().train_loss;
  EXPECT_LT(final_loss, 0.01 * initial) << initial << " -> " << final_loss;
}

TEST(Training, SameSeedSameHistoryAndWeights) {
  const auto ds = resdyn::testing::tiny_dataset();
  const auto a = train(ds, tiny_model(), quick_train());
  const auto b = train(ds, tiny_model(), quick_train());
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].val_loss, b.history[i].val_loss);
  }
  EXPECT_EQ(a.final_checkpoint.params, b.final_checkpoint.params);
  auto other = quick_train();
  other.seed = 9;
  EXPECT_FALSE(train(ds, tiny_model(), other).final_checkpoint.params == a.final_checkpoint.params);
}

TEST(Training, ZeroLearningRateKeepsLossFlat) {
  const auto ds = resdyn::testing::tiny_dataset();
  auto tc = quick_train(4);
  tc.lr = 0.0;
  tc.precision = Precision::F64;
  const auto r = train(ds, tiny_model(), tc);
  for (const auto& row : r.history) {
    EXPECT_NEAR(row.train_loss, r.history.front().train_loss, 1e-12 * r.history.front().train_loss);
    EXPECT_EQ(row.val_loss, r.history.front().val_loss);
  }
  EXPECT_EQ(r.final_checkpoint.params, init_params<double>(tiny_model(), tc.seed));
}

TEST(Training, LossFallsForEveryModelKind) {
  const auto ds = resdyn::testing::tiny_dataset();
  for (ModelKind k : {ModelKind::DyTR, ModelKind::Mlp, ModelKind::MlpTrans}) {
    const auto r = train(ds, tiny_model(k), quick_train(5));
    EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss) << model_kind_name(k);
    EXPECT_EQ(r.history.size(), 6u);
    EXPECT_EQ(r.final_checkpoint.precision, Precision::F32);
  }
}

TEST(Training, BestCheckpointHasLowestValidationLoss) {
  const auto ds = resdyn::testing::tiny_dataset();
  const auto r = train(ds, tiny_model(), quick_train(6));
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  for (const auto& row : r.history) {
    if (row.epoch > 0 && row.val_loss < best) {
      best = row.val_loss;
      best_epoch = row.epoch;
    }
  }
  EXPECT_EQ(r.best_epoch, best_epoch);
}

TEST(Training, DivergenceReportsEpoch) {
  const auto ds = resdyn::testing::tiny_dataset();
  auto tc = quick_train(3);
  tc.lr = 1e30;
  try {
    train(ds, tiny_model(), tc);
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    EXPECT_GE(e.epoch(), 1u);
  }
}

TEST(Training, EmptyTrainSplitRejected) {
  EXPECT_THROW(train(Runs{}, nullptr, tiny_model(), quick_train()), std::invalid_argument);
  Dataset empty;
  EXPECT_THROW(train(empty, tiny_model(), quick_train()), std::invalid_argument);
}

TEST(TrainConfigIo, RoundTripAndValidation) {
  TrainConfig c;
  c.epochs = 7;
  c.lr = 3e-4;
  c.alphas = {1, 2, 3};
  c.precision = Precision::F64;
  EXPECT_EQ(train_config_from_json(to_json(c)), c);
  EXPECT_THROW(train_config_from_json(nlohmann::json{{"learning_rate", 1}}), std::invalid_argument);
  EXPECT_THROW(train_config_from_json(nlohmann::json{{"batch_size", 0}}), std::invalid_argument);
  EXPECT_THROW(train_config_from_json(nlohmann::json{{"alphas", {1, 0, 1}}}), std::invalid_argument);
}

TEST(LossCsv, HeaderAndRows) {
  const auto dir = resdyn::testing::fresh_dir("losscsv");
  write_loss_csv({{0, 1.5, std::nan("")}, {1, 0.25, 0.5}}, dir / "loss.csv");
  EXPECT_EQ(resdyn::testing::slurp(dir / "loss.csv"), "epoch,train_loss,val_loss\n0,1.5,nan\n1,0.25,0.5\n");
}

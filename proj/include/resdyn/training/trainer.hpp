// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "resdyn/dytr/checkpoint.hpp"
#include "resdyn/training/adam.hpp"
#include "resdyn/training/loss.hpp"
#include "resdyn/training/windows.hpp"

namespace resdyn {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  double lr = 1e-3;
  double weight_decay = 1e-5;
  LossWeights alphas = kDefaultLossWeights;
  double beta = 1.0;  // smooth-L1 transition, in normalized units
  std::uint64_t seed = 0;
  Precision precision = Precision::F32;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw std::invalid_argument(std::string("invalid train config: ") + what);
    };
    require(epochs >= 1, "epochs must be >= 1");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(lr >= 0 && std::isfinite(lr), "lr must be a finite value >= 0");
    require(weight_decay >= 0, "weight_decay must be >= 0");
    require(alphas[0] > 0 && alphas[1] > 0 && alphas[2] > 0, "loss weights must be > 0");
    require(beta > 0, "beta must be > 0");
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs}, {"batch_size", c.batch_size}, {"lr", c.lr},     {"weight_decay", c.weight_decay},
          {"alphas", c.alphas}, {"beta", c.beta},             {"seed", c.seed}, {"precision", c.precision == Precision::F32 ? "f32" : "f64"}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c = {}) {
  if (!j.is_object()) throw std::invalid_argument("train config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "epochs") {
      c.epochs = v.get<std::size_t>();
    } else if (key == "batch_size") {
      c.batch_size = v.get<std::size_t>();
    } else if (key == "lr") {
      c.lr = v.get<double>();
    } else if (key == "weight_decay") {
      c.weight_decay = v.get<double>();
    } else if (key == "alphas") {
      v.get_to(c.alphas);
    } else if (key == "beta") {
      c.beta = v.get<double>();
    } else if (key == "seed") {
      c.seed = v.get<std::uint64_t>();
    } else if (key == "precision") {
      const auto s = v.get<std::string>();
      if (s != "f32" && s != "f64") throw std::invalid_argument("precision must be f32 or f64");
      c.precision = s == "f32" ? Precision::F32 : Precision::F64;
    } else {
      throw std::invalid_argument("train config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t epoch, const std::string& what)
      : std::runtime_error("training diverged in epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  [[nodiscard]] std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Epoch 0 holds the losses of the untrained initialization.
struct LossRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  Checkpoint final_checkpoint;
  Checkpoint best_checkpoint;  // lowest val loss; equals final when no val split is given
  std::size_t best_epoch = 0;
  std::vector<LossRow> history;
  std::size_t train_windows = 0;
  std::size_t skipped_runs = 0;
};

/// Per-epoch progress callback; receives the row just appended to the history.
using EpochHook = std::function<void(const LossRow&)>;

namespace detail {

template <class T>
double mean_loss(const ModelParams<T>& params, const DyTRConfig& cfg, const NormStats& stats,
                 const std::vector<Window>& windows, const TrainConfig& tc) {
  if (windows.empty()) return std::numeric_limits<double>::quiet_NaN();
  constexpr std::size_t kChunk = 1024;
  double total = 0.0;
  for (std::size_t i = 0; i < windows.size(); i += kChunk) {
    std::span<const Window> w(windows.data() + i, std::min(kChunk, windows.size() - i));
    ad::Tape<T> tape;
    BoundParams<T> P(tape, params);
    auto pred = forward(P, make_batch<T>(w, cfg, stats), cfg);
    auto target = tape.constant({w.size(), kStateDim}, make_targets<T>(w, stats));
    total += static_cast<double>(weighted_loss(pred, target, tc.alphas, T(tc.beta)).item()) * static_cast<double>(w.size());
  }
  return total / static_cast<double>(windows.size());
}

}  // namespace detail

/// Minibatch Adam on the weighted smooth-L1 objective. Batch order comes from a
/// seeded shuffle, so a run is a pure function of its inputs and configs.
template <class T>
TrainResult train_typed(const std::vector<Run>& train_runs, const std::vector<Run>* val_runs, const DyTRConfig& cfg,
                        const TrainConfig& tc, const EpochHook& hook = {}) {
  cfg.validate();
  tc.validate();
  const WindowSet train_set = make_windows(train_runs, cfg.seq_len);
  if (train_set.windows.empty()) throw std::invalid_argument("train: no training windows (split empty or too short)");
  const std::vector<Window> val_windows =
      val_runs != nullptr ? make_windows(*val_runs, cfg.seq_len).windows : std::vector<Window>{};
  const NormStats stats = compute_norm_stats(train_runs);

  ModelParams<T> params = init_params<T>(cfg, tc.seed);
  AdamState<T> adam(params);
  const AdamConfig ac{tc.lr, tc.weight_decay};
  Rng shuffle_rng = Rng::derived(tc.seed, 0xba7c4);

  TrainResult res;
  res.train_windows = train_set.windows.size();
  res.skipped_runs = train_set.skipped_runs;
  auto log_row = [&](LossRow row) {
    res.history.push_back(row);
    if (hook) hook(row);
  };
  log_row({0, detail::mean_loss(params, cfg, stats, train_set.windows, tc),
           detail::mean_loss(params, cfg, stats, val_windows, tc)});
  double best_val = std::numeric_limits<double>::infinity();
  res.best_checkpoint = make_checkpoint(cfg, stats, params);

  std::vector<Window> order = train_set.windows;
  for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double total = 0.0;
    for (std::size_t i = 0; i < order.size(); i += tc.batch_size) {
      std::span<const Window> w(order.data() + i, std::min(tc.batch_size, order.size() - i));
      params.zero_grad();
      ad::Tape<T> tape;
      BoundParams<T> P(tape, params);
      auto pred = forward(P, make_batch<T>(w, cfg, stats), cfg);
      auto target = tape.constant({w.size(), kStateDim}, make_targets<T>(w, stats));
      auto loss = weighted_loss(pred, target, tc.alphas, T(tc.beta));
      const double lv = static_cast<double>(loss.item());
      if (!std::isfinite(lv)) throw TrainingDiverged(epoch, "non-finite loss at batch " + std::to_string(i / tc.batch_size));
      tape.backward(loss);
      adam_step(params, adam, ac);
      total += lv * static_cast<double>(w.size());
    }
    const double val = detail::mean_loss(params, cfg, stats, val_windows, tc);
    if (val_runs != nullptr && !std::isfinite(val)) throw TrainingDiverged(epoch, "non-finite validation loss");
    log_row({epoch, total / static_cast<double>(order.size()), val});
    if (val_windows.empty() || val < best_val) {
      best_val = val_windows.empty() ? best_val : val;
      res.best_epoch = epoch;
      res.best_checkpoint = make_checkpoint(cfg, stats, params);
    }
  }
  res.final_checkpoint = make_checkpoint(cfg, stats, params);
  return res;
}

inline TrainResult train(const std::vector<Run>& train_runs, const std::vector<Run>* val_runs, const DyTRConfig& cfg,
                         const TrainConfig& tc, const EpochHook& hook = {}) {
  return tc.precision == Precision::F32 ? train_typed<float>(train_runs, val_runs, cfg, tc, hook)
                                        : train_typed<double>(train_runs, val_runs, cfg, tc, hook);
}

/// Trains on the train split and validates on val1.
inline TrainResult train(const Dataset& ds, const DyTRConfig& cfg, const TrainConfig& tc, const EpochHook& hook = {}) {
  if (ds.train.empty()) throw std::invalid_argument("train: dataset has no train split");
  return train(ds.train, ds.val1.empty() ? nullptr : &ds.val1, cfg, tc, hook);
}

inline std::string format_loss(double v) { return std::isfinite(v) ? format_double(v) : std::string("nan"); }

inline void write_loss_csv(const std::vector<LossRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,train_loss,val_loss\n";
  for (const auto& r : rows) out << r.epoch << ',' << format_loss(r.train_loss) << ',' << format_loss(r.val_loss) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace resdyn

// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

// resdyn: data generation, training, evaluation, ablation, plotting and gradient checks.
// Failures print one JSON object {"error", "command"} on stderr and exit nonzero.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "resdyn/autodiff/kernel_checks.hpp"
#include "resdyn/cli/run_config.hpp"
#include "resdyn/dytr/gradcheck.hpp"
#include "resdyn/evaluation/ablation.hpp"
#include "resdyn/evaluation/plot.hpp"
#include "resdyn/evaluation/report.hpp"

namespace fs = std::filesystem;
using namespace resdyn;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
};

struct ModelFlags {
  std::optional<std::string> model, query_mode, precision;
  std::optional<std::size_t> feature_dim, seq_len, depth, heads, ffn_dim, epochs, batch_size;
  std::optional<double> lr, weight_decay;

  void attach(CLI::App* app) {
    app->add_option("--model", model, "dytr | mlp | mlp-trans");
    app->add_option("--query-mode", query_mode, "full | a | b | c");
    app->add_option("--precision", precision, "f32 | f64");
    app->add_option("--feature-dim", feature_dim);
    app->add_option("--seq-len", seq_len);
    app->add_option("--depth", depth);
    app->add_option("--heads", heads);
    app->add_option("--ffn-dim", ffn_dim);
    app->add_option("--epochs", epochs);
    app->add_option("--batch-size", batch_size);
    app->add_option("--lr", lr);
    app->add_option("--weight-decay", weight_decay);
  }

  void apply(RunConfig& rc) const {
    if (model) rc.model.kind = model_kind_from_name(*model);
    if (query_mode) rc.model.query_mode = query_mode_from_name(*query_mode);
    if (feature_dim) rc.model.feature_dim = *feature_dim;
    if (seq_len) rc.model.seq_len = *seq_len;
    if (depth) rc.model.depth = *depth;
    if (heads) rc.model.num_heads = *heads;
    if (ffn_dim) rc.model.ffn_dim = *ffn_dim;
    if (epochs) rc.train.epochs = *epochs;
    if (batch_size) rc.train.batch_size = *batch_size;
    if (lr) rc.train.lr = *lr;
    if (weight_decay) rc.train.weight_decay = *weight_decay;
    if (precision) {
      if (*precision != "f32" && *precision != "f64") throw std::invalid_argument("--precision must be f32 or f64");
      rc.train.precision = *precision == "f32" ? Precision::F32 : Precision::F64;
    }
    rc.model.validate();
    rc.train.validate();
  }
};

RunConfig load_config(const CommonFlags& f) {
  RunConfig rc = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  rc.seed = rc.resolve_seed(f.seed);
  rc.train.seed = *rc.seed;
  return rc;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void archive_config(const RunConfig& rc, const fs::path& dir, const std::string& name = "run_config.json") {
  write_text(dir / name, to_json(rc).dump(2) + "\n");
}

void print_json(const json& j) { std::cout << j.dump() << std::endl; }

Dataset load_data(const std::string& dir) {
  if (dir.empty()) throw std::invalid_argument("--data is required");
  return read_dataset(dir);
}

EpochHook progress_hook(bool quiet) {
  if (quiet) return {};
  return [](const LossRow& r) {
    std::cerr << "epoch " << r.epoch << " train_loss " << format_loss(r.train_loss) << " val_loss " << format_loss(r.val_loss)
              << std::endl;
  };
}

int cmd_gen_data(const CommonFlags& f, const std::string& out, const std::string& scale, std::size_t jobs) {
  RunConfig rc = load_config(f);
  GenerationOptions opt;
  if (scale != "desk" && scale != "paper") throw std::invalid_argument("--scale must be desk or paper");
  opt.recipe = scale == "desk" ? SplitRecipe::desk() : SplitRecipe::paper();
  opt.ranges = rc.ranges;
  opt.vehicle = rc.vehicle;
  opt.cosim = {rc.filter_bounds, rc.gt_substeps};
  opt.seed = *rc.seed;
  opt.jobs = jobs;
  opt.max_reject_fraction = rc.max_reject_fraction;
  ensure_dir(out);
  GenerationReport report;
  const Dataset ds = generate_dataset(opt, &report);
  const SplitManifest m = write_dataset(ds, out);
  archive_config(rc, out);
  print_json({{"out", out},
              {"scale", scale},
              {"train", m.train.size()},
              {"val1", m.val1.size()},
              {"val2", m.val2.size()},
              {"candidates", report.candidates},
              {"rejected", report.rejections.size()}});
  return 0;
}

int cmd_train(const CommonFlags& f, const ModelFlags& mf, const std::string& data, const std::string& out, bool quiet) {
  RunConfig rc = load_config(f);
  mf.apply(rc);
  const Dataset ds = load_data(data);
  if (ds.train.empty()) throw std::invalid_argument("dataset has no train split");
  ensure_dir(out);
  archive_config(rc, out);
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult res = train(ds, rc.model, rc.train, progress_hook(quiet));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  save_checkpoint(res.final_checkpoint, fs::path(out) / "checkpoint.json");
  save_checkpoint(res.best_checkpoint, fs::path(out) / "checkpoint_best.json");
  write_loss_csv(res.history, fs::path(out) / "loss.csv");
  print_json({{"model", model_kind_name(rc.model.kind)},
              {"params", res.final_checkpoint.param_count()},
              {"train_windows", res.train_windows},
              {"epochs", rc.train.epochs},
              {"final_train_loss", res.history.back().train_loss},
              {"best_epoch", res.best_epoch},
              {"seconds", secs}});
  return 0;
}

std::vector<std::pair<std::string, Checkpoint>> load_models(const std::vector<std::string>& paths,
                                                            const std::vector<std::string>& names) {
  if (paths.empty()) throw std::invalid_argument("at least one --checkpoint is required");
  if (!names.empty() && names.size() != paths.size()) throw std::invalid_argument("--name count must match --checkpoint count");
  std::vector<std::pair<std::string, Checkpoint>> out;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    Checkpoint c = load_checkpoint(paths[i]);
    std::string name = names.empty() ? std::string(model_kind_name(c.config.kind)) : names[i];
    for (const auto& [n, _] : out) {
      if (n == name) name += "#" + std::to_string(i);
    }
    out.emplace_back(name, std::move(c));
  }
  return out;
}

json report_summary(const std::vector<ModelReport>& reports) {
  json j = json::array();
  for (const auto& r : reports) {
    json row = {{"model", r.model}, {"params", r.params}};
    for (Split s : kEvalSplits) row[std::string(split_name(s)) + "_avg_reduction_pct"] = r.average_reduction(s);
    j.push_back(row);
  }
  return j;
}

int cmd_eval(const std::vector<std::string>& ckpts, const std::vector<std::string>& names, const std::string& data,
             const std::string& out) {
  const auto models = load_models(ckpts, names);
  const Dataset ds = load_data(data);
  const auto reports = compare_models(models, ds);
  ensure_dir(out);
  export_report(report_rows(reports), fs::path(out) / "report");
  print_json({{"out", out}, {"models", report_summary(reports)}});
  return 0;
}

int cmd_ablate(const CommonFlags& f, const ModelFlags& mf, const std::string& sweep, const std::string& data,
               const std::string& out, bool quiet) {
  RunConfig rc = load_config(f);
  mf.apply(rc);
  const auto eq = sweep.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("--sweep must look like T=1,5,15");
  AblationSpec spec;
  spec.variable = sweep_variable_from_name(sweep.substr(0, eq));
  std::stringstream ss(sweep.substr(eq + 1));
  for (std::string v; std::getline(ss, v, ',');) {
    if (!v.empty()) spec.values.push_back(v);
  }
  spec.model = rc.model;
  spec.train = rc.train;
  spec.validate();
  const Dataset ds = load_data(data);
  ensure_dir(out);
  archive_config(rc, out);
  const AblationResult res = ablate(spec, ds, progress_hook(quiet));
  json cells = json::array();
  for (const auto& c : res.cells) {
    json cell = {{"value", c.value}, {"ok", c.checkpoint.has_value()}};
    if (!c.error.empty()) cell["error"] = c.error;
    if (c.checkpoint) save_checkpoint(*c.checkpoint, fs::path(out) / ("checkpoint_" + c.value + ".json"));
    cells.push_back(cell);
  }
  export_report(report_rows(res.reports), fs::path(out) / "ablation");
  print_json({{"out", out}, {"sweep", sweep}, {"cells", cells}, {"models", report_summary(res.reports)}});
  return res.reports.empty() ? 1 : 0;
}

int cmd_plot(const std::string& ckpt_path, const std::string& data, const std::string& condition,
             std::optional<double> mass, const std::string& out) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Dataset ds = load_data(data);
  const Run* run = nullptr;
  for (Split s : {Split::Val1, Split::Val2, Split::Train}) {
    for (const auto& r : ds.runs(s)) {
      if (r.condition_id == condition && (!mass || r.mass == *mass) && run == nullptr) run = &r;
    }
  }
  if (run == nullptr) throw std::invalid_argument("condition '" + condition + "' not found in any split");
  if (out.empty()) throw std::invalid_argument("--out is required");
  const Traces tr = plot_traces(ckpt, *run, out);
  print_json({{"out", out},
              {"condition", run->condition_id},
              {"mass", run->mass},
              {"base_distance", mean_distance(tr.base, tr.gt)},
              {"corrected_distance", mean_distance(tr.corrected, tr.gt)}});
  return 0;
}

int cmd_grad_check(const CommonFlags& f, const ModelFlags& mf, const std::string& which, double tol) {
  RunConfig rc = load_config(f);
  rc.model.feature_dim = 16;
  rc.model.seq_len = 5;
  rc.model.depth = 1;
  mf.apply(rc);
  json checks = json::array();
  double worst = 0.0;
  auto record = [&](const std::string& name, const ad::GradCheckResult& r) {
    worst = std::max(worst, r.max_rel_error);
    checks.push_back({{"name", name}, {"max_rel_error", r.max_rel_error}, {"checked", r.checked}});
  };
  if (which == "kernels" || which == "all") {
    for (const auto& k : ad::check_all_kernels(*rc.seed)) record("kernel:" + k.kernel, k.result);
  }
  if (which == "models" || which == "all") {
    for (ModelKind kind : {ModelKind::DyTR, ModelKind::Mlp, ModelKind::MlpTrans}) {
      DyTRConfig cfg = rc.model;
      cfg.kind = kind;
      record("model:" + std::string(model_kind_name(kind)), model_grad_check(cfg, *rc.seed));
    }
  }
  if (checks.empty()) throw std::invalid_argument("--which must be kernels, models or all");
  const bool ok = worst < tol;
  print_json({{"ok", ok}, {"max_rel_error", worst}, {"tolerance", tol}, {"checks", checks}});
  return ok ? 0 : 1;
}

int fail(const std::string& command, const std::string& message, int code) {
  std::cerr << json{{"command", command}, {"error", message}}.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual dynamics correction: data generation, training and evaluation"};
  app.require_subcommand(1);

  CommonFlags common;
  ModelFlags mf;
  std::string out, data, scale = "desk", sweep, condition, which = "all";
  std::size_t jobs = 1;
  bool quiet = false;
  std::vector<std::string> ckpts, names;
  std::optional<double> mass;
  double tol = 1e-4;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "run config JSON")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "seed (falls back to RESDYN_SEED, then 0)");
  };

  auto* gen = app.add_subcommand("gen-data", "simulate conditions and write the dataset splits");
  add_common(gen);
  gen->add_option("--out", out, "output directory")->required();
  gen->add_option("--scale", scale, "desk | paper");
  gen->add_option("--jobs", jobs, "worker threads");

  auto* tr = app.add_subcommand("train", "train a residual model");
  add_common(tr);
  mf.attach(tr);
  tr->add_option("--data", data, "dataset directory")->required();
  tr->add_option("--out", out, "output directory")->required();
  tr->add_flag("--quiet", quiet);

  auto* ev = app.add_subcommand("eval", "evaluate checkpoints on val1 and val2");
  ev->add_option("--checkpoint", ckpts, "checkpoint file (repeatable)")->required();
  ev->add_option("--name", names, "display name per checkpoint");
  ev->add_option("--data", data, "dataset directory")->required();
  ev->add_option("--out", out, "output directory")->required();

  auto* ab = app.add_subcommand("ablate", "train and evaluate one model per sweep value");
  add_common(ab);
  mf.attach(ab);
  ab->add_option("--sweep", sweep, "variable=values, e.g. T=1,5,15 | D=1,2 | query_mode=full,a")->required();
  ab->add_option("--data", data, "dataset directory")->required();
  ab->add_option("--out", out, "output directory")->required();
  ab->add_flag("--quiet", quiet);

  auto* pl = app.add_subcommand("plot", "write GT / base / corrected traces as SVG");
  std::string plot_ckpt;
  pl->add_option("--checkpoint", plot_ckpt)->required();
  pl->add_option("--data", data)->required();
  pl->add_option("--condition", condition)->required();
  pl->add_option("--mass", mass);
  pl->add_option("--out", out, "SVG file")->required();

  auto* gc = app.add_subcommand("grad-check", "finite-difference check of kernels and models");
  add_common(gc);
  mf.attach(gc);
  gc->add_option("--which", which, "kernels | models | all");
  gc->add_option("--tolerance", tol);

  std::string command = "resdyn";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(command, e.what(), 2);
  }

  try {
    if (*gen) return cmd_gen_data(common, out, scale, jobs);
    if (*tr) return cmd_train(common, mf, data, out, quiet);
    if (*ev) return cmd_eval(ckpts, names, data, out);
    if (*ab) return cmd_ablate(common, mf, sweep, data, out, quiet);
    if (*pl) return cmd_plot(plot_ckpt, data, condition, mass, out);
    if (*gc) return cmd_grad_check(common, mf, which, tol);
  } catch (const std::exception& e) {
    for (auto* sub : app.get_subcommands()) command = sub->get_name();
    return fail(command, e.what(), 1);
  }
  return fail(command, "no subcommand", 2);
}

// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

// Drives the resdyn binary as a subprocess.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>

#include "fixtures.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using resdyn::testing::fresh_dir;
using resdyn::testing::slurp;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

Result run(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const auto err_path = fs::temp_directory_path() / ("resdyn_cli_err_" + std::to_string(counter++));
  const std::string cmd = env + " " RESDYN_CLI_PATH " " + args + " 2>" + err_path.string();
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (p == nullptr) return r;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_path);
  fs::remove(err_path);
  return r;
}

json last_json_line(const std::string& s) {
  auto end = s.find_last_not_of('\n');
  auto start = s.rfind('\n', end);
  return json::parse(s.substr(start == std::string::npos ? 0 : start + 1, end + 1));
}

/// Short runs and a small network so the whole pipeline takes seconds.
fs::path small_config(const fs::path& dir) {
  const json j = {{"dataset", {{"ranges", {{"duration", 2.0}}}}},
                  {"model", {{"feature_dim", 16}, {"seq_len", 5}, {"depth", 1}}},
                  {"train", {{"epochs", 2}, {"batch_size", 64}}}};
  const auto p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

}  // namespace

TEST(Cli, HelpExitsZero) {
  const auto r = run("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("gen-data"), std::string::npos);
}

TEST(Cli, GradCheckPasses) {
  const auto r = run("grad-check --which all");
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  const auto j = last_json_line(r.out);
  EXPECT_TRUE(j["ok"].get<bool>());
  EXPECT_LT(j["max_rel_error"].get<double>(), 1e-4);
  EXPECT_GT(j["checks"].size(), 10u);
}

TEST(Cli, ParseErrorsAreJsonOnStderr) {
  for (const char* args : {"", "no-such-command", "train --data /tmp"}) {
    const auto r = run(args);
    EXPECT_EQ(r.code, 2) << args;
    const auto j = last_json_line(r.err);
    EXPECT_TRUE(j.contains("error")) << r.err;
    EXPECT_TRUE(j.contains("command"));
  }
}

TEST(Cli, UnknownConfigKeyRejected) {
  const auto dir = fresh_dir("cli_badcfg");
  std::ofstream(dir / "bad.json") << R"({"model": {"feature_dim": 16, "widht": 3}})";
  const auto r = run("gen-data --config " + (dir / "bad.json").string() + " --out " + (dir / "d").string());
  EXPECT_EQ(r.code, 1);
  const auto j = last_json_line(r.err);
  EXPECT_EQ(j["command"], "gen-data");
  EXPECT_NE(j["error"].get<std::string>().find("widht"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "d" / "manifest.json"));
}

TEST(Cli, MissingDatasetReported) {
  const auto dir = fresh_dir("cli_nodata");
  const auto r = run("train --data " + (dir / "missing").string() + " --out " + (dir / "o").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(last_json_line(r.err)["command"], "train");
}

TEST(Cli, FullPipeline) {
  const auto dir = fresh_dir("cli_pipeline");
  const auto cfg = small_config(dir).string();
  const auto data = (dir / "data").string();

  auto r = run("gen-data --config " + cfg + " --out " + data + " --seed 3");
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = last_json_line(r.out);
  EXPECT_EQ(j["train"].get<int>(), 24);
  EXPECT_TRUE(fs::exists(dir / "data" / "manifest.json"));

  r = run("train --quiet --config " + cfg + " --data " + data + " --out " + (dir / "m").string() + " --seed 3");
  ASSERT_EQ(r.code, 0) << r.err;
  j = last_json_line(r.out);
  EXPECT_EQ(j["model"], "dytr");
  EXPECT_EQ(j["epochs"].get<int>(), 2);
  for (const char* f : {"checkpoint.json", "checkpoint_best.json", "loss.csv", "run_config.json"}) {
    EXPECT_TRUE(fs::exists(dir / "m" / f)) << f;
  }
  const auto loss = slurp(dir / "m" / "loss.csv");
  EXPECT_EQ(std::count(loss.begin(), loss.end(), '\n'), 4);

  r = run("train --quiet --config " + cfg + " --data " + data + " --out " + (dir / "b").string() + " --model mlp");
  ASSERT_EQ(r.code, 0) << r.err;

  const auto ck = (dir / "m" / "checkpoint.json").string();
  r = run("eval --checkpoint " + ck + " --name dytr --checkpoint " + (dir / "b" / "checkpoint.json").string() +
          " --name mlp --data " + data + " --out " + (dir / "e").string());
  ASSERT_EQ(r.code, 0) << r.err;
  j = last_json_line(r.out);
  ASSERT_EQ(j["models"].size(), 2u);
  EXPECT_EQ(j["models"][1]["model"], "mlp");
  EXPECT_TRUE(j["models"][0].contains("val2_avg_reduction_pct"));
  EXPECT_EQ(json::parse(slurp(dir / "e" / "report.json")).size(), 18u);

  r = run("plot --checkpoint " + ck + " --data " + data + " --condition c008 --out " + (dir / "p.svg").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "p.svg").rfind("<?xml", 0), 0u);
  r = run("plot --checkpoint " + ck + " --data " + data + " --condition nope --out " + (dir / "q.svg").string());
  EXPECT_EQ(r.code, 1);

  r = run("ablate --quiet --config " + cfg + " --data " + data + " --sweep T=1,5 --epochs 1 --out " +
          (dir / "a").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "a" / "checkpoint_1.json"));
  EXPECT_TRUE(fs::exists(dir / "a" / "ablation.csv"));
}

TEST(Cli, SeedFromEnvironment) {
  const auto dir = fresh_dir("cli_seed");
  const auto cfg = small_config(dir).string();
  ASSERT_EQ(run("gen-data --config " + cfg + " --out " + (dir / "a").string(), "RESDYN_SEED=5").code, 0);
  ASSERT_EQ(run("gen-data --config " + cfg + " --out " + (dir / "b").string() + " --seed 5").code, 0);
  ASSERT_EQ(run("gen-data --config " + cfg + " --out " + (dir / "c").string() + " --seed 6").code, 0);
  const auto a = slurp(dir / "a" / "manifest.json");
  EXPECT_EQ(a, slurp(dir / "b" / "manifest.json"));
  EXPECT_NE(a, slurp(dir / "c" / "manifest.json"));
}

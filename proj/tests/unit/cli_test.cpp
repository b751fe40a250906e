// Copyright 2026 The FutureNet-LOF Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path & p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Runs the binary through the shell, optionally under an env assignment
/// prefix, and returns its exit code.
int run_cli_env(const std::string & env, const std::string & args, std::string * out = nullptr) {
  static int counter = 0;
  const fs::path log =
    fs::temp_directory_path() / ("futurenet_cli_log_" + std::to_string(counter++) + ".txt");
  std::string cmd = env.empty() ? std::string() : env + " ";
  cmd += std::string(FUTURENET_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (out != nullptr) *out = slurp(log);
  fs::remove(log);
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

int run_cli(const std::string & args, std::string * output = nullptr) {
  return run_cli_env("", args, output);
}

fs::path fresh_dir(const std::string & tag) {
  const fs::path dir = fs::temp_directory_path() / ("futurenet_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

bool same_dataset_bytes(const fs::path & a, const fs::path & b, int n) {
  if (slurp(a / "manifest.json") != slurp(b / "manifest.json")) return false;
  for (int i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%06d.json", i);
    if (slurp(a / name) != slurp(b / name)) return false;
  }
  return true;
}

TEST(Cli, GenerationIsDeterministicAcrossInvocations) {
  const fs::path a = fresh_dir("gen_a");
  const fs::path b = fresh_dir("gen_b");
  ASSERT_EQ(run_cli("gen --out " + a.string() + " --n 2 --seed 5"), 0);
  ASSERT_EQ(run_cli("gen --out " + b.string() + " --n 2 --seed 5"), 0);
  EXPECT_TRUE(same_dataset_bytes(a, b, 2));

  // Rerunning over an existing directory rewrites the same bytes.
  ASSERT_EQ(run_cli("gen --out " + a.string() + " --n 2 --seed 5"), 0);
  EXPECT_TRUE(same_dataset_bytes(a, b, 2));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, EnvironmentSeedSitsBelowExplicitFlags) {
  const fs::path by_flag = fresh_dir("seed_flag");
  const fs::path by_env = fresh_dir("seed_env");
  const fs::path override_dir = fresh_dir("seed_override");
  const fs::path four = fresh_dir("seed_four");

  ASSERT_EQ(run_cli("gen --out " + by_flag.string() + " --n 1 --seed 9"), 0);
  ASSERT_EQ(run_cli_env("FUTURENET_SEED=9", "gen --out " + by_env.string() + " --n 1"), 0);
  EXPECT_TRUE(same_dataset_bytes(by_flag, by_env, 1));

  ASSERT_EQ(
    run_cli_env("FUTURENET_SEED=9", "gen --out " + override_dir.string() + " --n 1 --seed 4"), 0);
  ASSERT_EQ(run_cli("gen --out " + four.string() + " --n 1 --seed 4"), 0);
  EXPECT_TRUE(same_dataset_bytes(override_dir, four, 1));
  EXPECT_FALSE(same_dataset_bytes(override_dir, by_flag, 1));

  std::string msg;
  EXPECT_EQ(run_cli_env("FUTURENET_SEED=banana", "gen --out /tmp/x --n 1", &msg), 2);
  EXPECT_NE(msg.find("FUTURENET_SEED"), std::string::npos);

  for (const auto & d : {by_flag, by_env, override_dir, four}) fs::remove_all(d);
}

TEST(Cli, ExitCodesDistinguishFailureKinds) {
  std::string msg;
  EXPECT_EQ(run_cli("", &msg), 2);                     // no subcommand
  EXPECT_EQ(run_cli("gen --out /tmp/x", &msg), 2);     // missing required --n
  EXPECT_EQ(run_cli("frobnicate", &msg), 2);           // unknown subcommand

  const fs::path ds = fresh_dir("codes_ds");
  ASSERT_EQ(run_cli("gen --out " + ds.string() + " --n 1 --seed 2"), 0);

  const fs::path run_dir = fresh_dir("codes_run");
  EXPECT_EQ(
    run_cli(
      "train --data " + ds.string() + "_missing --out " + run_dir.string() + " --total-steps 1",
      &msg),
    3);
  EXPECT_NE(msg.find("error:"), std::string::npos);

  // Width not divisible by the head count.
  EXPECT_EQ(
    run_cli(
      "train --data " + ds.string() + " --out " + run_dir.string() +
        " --total-steps 1 --d-model 10 --n-heads 4",
      &msg),
    2);

  EXPECT_EQ(
    run_cli("eval --ckpt " + (ds / "nope.fnlof").string() + " --data " + ds.string(), &msg), 3);

  const fs::path stub = ds / "stub.fnlof";
  std::ofstream(stub, std::ios::binary) << "FNLOF";  // magic only, then truncated
  EXPECT_EQ(run_cli("eval --ckpt " + stub.string() + " --data " + ds.string(), &msg), 4);
  EXPECT_NE(msg.find("truncated"), std::string::npos);

  fs::remove_all(ds);
  fs::remove_all(run_dir);
}

TEST(Cli, PipelineProducesForecastsReportsAndFigures) {
  const fs::path ds = fresh_dir("pipe_ds");
  const fs::path run_dir = fresh_dir("pipe_run");
  ASSERT_EQ(
    run_cli("gen --out " + ds.string() + " --n 2 --seed 3 --agents-min 2 --agents-max 3"), 0);

  std::string msg;
  ASSERT_EQ(
    run_cli(
      "train --data " + ds.string() + " --out " + run_dir.string() +
        " --total-steps 2 --batch-size 2 --d-model 16 --n-heads 2 --n-modes 2 --seed 4",
      &msg),
    0)
    << msg;

  const fs::path ckpt = run_dir / "checkpoint.fnlof";
  ASSERT_TRUE(fs::exists(ckpt));
  ASSERT_TRUE(fs::exists(run_dir / "config.json"));
  const nlohmann::json config = nlohmann::json::parse(slurp(run_dir / "config.json"));
  EXPECT_EQ(config.at("model").at("d_model").get<int>(), 16);
  EXPECT_TRUE(config.contains("loss"));
  EXPECT_TRUE(config.contains("train"));

  std::istringstream log_lines(slurp(run_dir / "train_log.jsonl"));
  std::string line;
  int n_records = 0;
  while (std::getline(log_lines, line)) {
    if (line.empty()) continue;
    const nlohmann::json rec = nlohmann::json::parse(line);
    EXPECT_TRUE(std::isfinite(rec.at("total").get<double>()));
    n_records += 1;
  }
  EXPECT_EQ(n_records, 2);

  const fs::path scene = ds / "scene_000000.json";
  const fs::path fc_path = run_dir / "fc.json";
  ASSERT_EQ(
    run_cli(
      "predict --ckpt " + ckpt.string() + " --scene " + scene.string() + " --out " +
        fc_path.string(),
      &msg),
    0)
    << msg;
  const nlohmann::json fc = nlohmann::json::parse(slurp(fc_path));
  EXPECT_EQ(fc.at("n_modes").get<int>(), 2);
  for (const auto & agent : fc.at("agents")) {
    double total = 0.0;
    for (const auto & mode : agent.at("modes")) total += mode.at("prob").get<double>();
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
  EXPECT_TRUE(fc.contains("lof"));

  const fs::path report_path = run_dir / "eval.json";
  ASSERT_EQ(
    run_cli(
      "eval --ckpt " + ckpt.string() + " --data " + ds.string() + " --report " +
        report_path.string(),
      &msg),
    0)
    << msg;
  const nlohmann::json report = nlohmann::json::parse(slurp(report_path));
  EXPECT_EQ(report.at("n_scenes").get<int>(), 2);
  EXPECT_TRUE(report.at("failures").empty());
  EXPECT_TRUE(report.at("trajectory").contains("min_ade_k"));
  EXPECT_TRUE(report.at("multi_world").contains("avg_min_fde"));
  EXPECT_TRUE(report.at("lof").contains("per_keyframe"));

  // Forecast and report bytes are stable across repeat runs.
  const fs::path fc2 = run_dir / "fc2.json";
  ASSERT_EQ(
    run_cli(
      "predict --ckpt " + ckpt.string() + " --scene " + scene.string() + " --out " + fc2.string()),
    0);
  EXPECT_EQ(slurp(fc_path), slurp(fc2));
  const fs::path report2 = run_dir / "eval2.json";
  ASSERT_EQ(
    run_cli(
      "eval --ckpt " + ckpt.string() + " --data " + ds.string() + " --report " + report2.string()),
    0);
  EXPECT_EQ(slurp(report_path), slurp(report2));

  const fs::path svg = run_dir / "fig.svg";
  ASSERT_EQ(run_cli("plot --scene " + scene.string() + " --out " + svg.string(), &msg), 0) << msg;
  const std::string svg_text = slurp(svg);
  EXPECT_EQ(svg_text.rfind("<svg", 0), 0u);

  const fs::path png = run_dir / "fig.png";
  ASSERT_EQ(
    run_cli(
      "plot --scene " + scene.string() + " --forecast " + fc_path.string() + " --out " +
        png.string(),
      &msg),
    0)
    << msg;
  const std::string png_bytes = slurp(png);
  ASSERT_GE(png_bytes.size(), 8u);
  EXPECT_EQ(static_cast<unsigned char>(png_bytes[0]), 0x89u);
  EXPECT_EQ(png_bytes.substr(1, 3), "PNG");

  fs::remove_all(ds);
  fs::remove_all(run_dir);
}

}  // namespace

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

// Single operator entrypoint. Subcommands: gen (synthetic datasets), train,
// eval (metrics report), predict (forecast JSON for one scene), plot (SVG or
// PNG figure). Configs layer as: config file < FUTURENET_SEED < flags.
// Exit codes: 0 success, 2 usage or config error, 3 I/O or data error,
// 4 checkpoint error, 1 anything else.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "futurenet/metrics/evaluate.hpp"
#include "futurenet/model/forecast_io.hpp"
#include "futurenet/scene/dataset.hpp"
#include "futurenet/synth/generator.hpp"
#include "futurenet/train/trainer.hpp"
#include "futurenet/viz/plot.hpp"

namespace fn = futurenet;
namespace fs = std::filesystem;

namespace {

std::optional<std::uint64_t> env_seed() {
  const char * raw = std::getenv("FUTURENET_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  char * end = nullptr;
  const unsigned long long v = std::strtoull(raw, &end, 10);
  if (end == raw || *end != '\0') {
    throw fn::ConfigError("FUTURENET_SEED must be a non-negative integer");
  }
  return static_cast<std::uint64_t>(v);
}

struct GenArgs {
  std::int64_t n = 0;
  std::string out;
  bool no_labels = false;
  fn::GenConfig cfg;
};

struct TrainArgs {
  std::string data;
  std::string out;
  std::string config_path;
  std::string resume_path;
  std::int64_t max_steps = -1;
  // Flag presence is tracked through the CLI11 options themselves.
  fn::ModelConfig model;
  fn::TrainConfig train;
  fn::LossConfig loss;
  std::string precision;
  bool no_refinement = false;
  bool no_lof = false;
};

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string report_path;
  std::string csv_path;
  fn::EvalConfig cfg;
};

struct PredictArgs {
  std::string ckpt;
  std::string scene_path;
  std::string out;
};

struct PlotArgs {
  std::string scene_path;
  std::string forecast_path;
  std::string out;
  fn::PlotOptions options;
};

int run_gen(const GenArgs & args) {
  args.cfg.validate();
  fn::generate_dataset(args.cfg, args.n, args.out, !args.no_labels);
  std::cout << "wrote " << args.n << " scenes to " << args.out << "\n";
  return 0;
}

int run_train(CLI::App * cmd, TrainArgs & args) {
  if (!args.config_path.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(fn::read_text_file(args.config_path));
    } catch (const nlohmann::json::exception & e) {
      throw fn::ConfigError("cannot parse config '" + args.config_path + "': " + e.what());
    }
    if (j.contains("model")) j.at("model").get_to(args.model);
    if (j.contains("loss")) j.at("loss").get_to(args.loss);
    if (j.contains("train")) j.at("train").get_to(args.train);
  }
  if (const auto seed = env_seed()) args.train.seed = *seed;

  // Flags land in a scratch copy during parsing; fold in only the ones the
  // user actually passed so config-file values survive.
  auto passed = [&](const std::string & flag) { return cmd->count(flag) > 0; };
  if (passed("--seed")) args.train.seed = std::stoull(cmd->get_option("--seed")->as<std::string>());
  if (passed("--total-steps")) args.train.total_steps = cmd->get_option("--total-steps")->as<std::int64_t>();
  if (passed("--batch-size")) args.train.batch_size = cmd->get_option("--batch-size")->as<std::int64_t>();
  if (passed("--lr0")) args.train.lr0 = cmd->get_option("--lr0")->as<double>();
  if (passed("--lr-min")) args.train.lr_min = cmd->get_option("--lr-min")->as<double>();
  if (passed("--weight-decay")) args.train.weight_decay = cmd->get_option("--weight-decay")->as<double>();
  if (passed("--grad-clip")) args.train.grad_clip_norm = cmd->get_option("--grad-clip")->as<double>();
  if (passed("--checkpoint-every")) {
    args.train.checkpoint_every = cmd->get_option("--checkpoint-every")->as<std::int64_t>();
  }
  if (passed("--precision")) args.train.precision = fn::precision_from_string(args.precision);
  if (passed("--d-model")) args.model.d_model = cmd->get_option("--d-model")->as<std::int64_t>();
  if (passed("--n-heads")) args.model.n_heads = cmd->get_option("--n-heads")->as<std::int64_t>();
  if (passed("--n-modes")) args.model.n_modes = cmd->get_option("--n-modes")->as<std::int64_t>();
  if (passed("--n-keyframes")) args.model.n_keyframes = cmd->get_option("--n-keyframes")->as<std::int64_t>();
  if (args.no_refinement) args.model.use_refinement = false;
  if (args.no_lof) args.model.use_lof = false;

  std::optional<fn::Checkpoint> resume;
  if (!args.resume_path.empty()) {
    resume = fn::load_checkpoint(args.resume_path);
    const bool model_given = !args.config_path.empty() || passed("--d-model") ||
                             passed("--n-heads") || passed("--n-modes") ||
                             passed("--n-keyframes") || args.no_refinement || args.no_lof;
    if (!model_given) args.model = resume->header.model;
  }
  args.model.validate();
  args.train.validate();
  args.loss.validate();

  const std::vector<fn::SceneRecord> records = fn::load_dataset(args.data);
  if (records.empty()) {
    throw fn::ConfigError("dataset directory '" + args.data + "' contains no scenes");
  }

  std::error_code ec;
  fs::create_directories(args.out, ec);
  if (ec) throw fn::IoError("cannot create output directory '" + args.out + "': " + ec.message());

  fn::TrainOptions options;
  options.checkpoint_path = (fs::path(args.out) / "checkpoint.fnlof").string();
  options.log_path = (fs::path(args.out) / "train_log.jsonl").string();
  options.append_log = resume.has_value();
  options.max_steps_this_run = args.max_steps;
  if (resume.has_value()) options.resume = &*resume;

  const fn::TrainResult result = fn::train(records, args.model, args.loss, args.train, options);

  const nlohmann::json used{
    {"model", args.model}, {"loss", args.loss}, {"train", args.train}};
  fn::write_text_file((fs::path(args.out) / "config.json").string(), used.dump(2) + "\n");
  std::cout << "trained to step " << result.final_step << ", final total loss "
            << result.final_total << "\n";
  return 0;
}

int run_eval(const EvalArgs & args) {
  fn::Checkpoint ck = fn::load_checkpoint(args.ckpt);
  const std::vector<fn::SceneRecord> records = fn::load_dataset(args.data);
  const nlohmann::json report = fn::evaluate_dataset(ck.header.model, ck.params, records, args.cfg);
  if (args.report_path.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    fn::write_text_file(args.report_path, report.dump(2) + "\n");
  }
  if (!args.csv_path.empty()) {
    fn::write_text_file(args.csv_path, fn::report_lof_csv(report));
  }
  return 0;
}

int run_predict(const PredictArgs & args) {
  fn::Checkpoint ck = fn::load_checkpoint(args.ckpt);
  const fn::Scene scene = fn::load_scene(args.scene_path);
  fn::check_scene_horizons(scene, ck.header.model);
  const fn::EncoderPlan plan = fn::make_encoder_plan(scene, ck.header.model);
  fn::Graph<double> g;
  const fn::BoundParams bound = ck.params.bind(g);
  const fn::DecodeOutputs<double> out = fn::forward_scene(g, bound, ck.header.model, plan);
  const fn::TrajectoryForecast fc = fn::to_forecast(g, out);
  const fn::LaneOccupancyField lof = fn::to_lof(g, out);
  fn::write_text_file(args.out, fn::forecast_to_json(scene, fc, &lof).dump(2) + "\n");
  return 0;
}

int run_plot(const PlotArgs & args) {
  const fn::Scene scene = fn::load_scene(args.scene_path);
  if (args.forecast_path.empty()) {
    fn::write_plot(args.out, scene, nullptr, nullptr, args.options);
    return 0;
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(fn::read_text_file(args.forecast_path));
  } catch (const nlohmann::json::exception & e) {
    throw fn::DataError("cannot parse forecast '" + args.forecast_path + "': " + e.what());
  }
  const fn::ParsedForecast parsed = fn::forecast_from_json(j);
  fn::write_plot(
    args.out, scene, &parsed.forecast, parsed.lof.enabled() ? &parsed.lof : nullptr, args.options);
  return 0;
}

}  // namespace

int main(int argc, char ** argv) {
  CLI::App app{"trajectory forecasting and lane occupancy field toolkit"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App * gen_cmd = app.add_subcommand("gen", "generate a synthetic scenario dataset");
  gen_cmd->add_option("--n", gen.n, "number of scenes")->required();
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  gen_cmd->add_option("--seed", gen.cfg.seed, "generator seed");
  gen_cmd
    ->add_option_function<std::string>(
      "--layout", [&](const std::string & s) { gen.cfg.layout = fn::layout_from_string(s); },
      "lane layout: straight | curve | t_intersection | crossroad")
    ->expected(1);
  gen_cmd->add_option("--agents-min", gen.cfg.n_agents_min, "minimum agents per scene");
  gen_cmd->add_option("--agents-max", gen.cfg.n_agents_max, "maximum agents per scene");
  gen_cmd->add_option("--t-history", gen.cfg.t_history, "history steps");
  gen_cmd->add_option("--t-future", gen.cfg.t_future, "future steps");
  gen_cmd->add_option("--n-keyframes", gen.cfg.n_keyframes, "occupancy keyframes");
  gen_cmd->add_option("--dt", gen.cfg.dt, "step duration in seconds");
  gen_cmd->add_option("--point-spacing", gen.cfg.point_spacing, "map point spacing in meters");
  gen_cmd->add_option("--lane-width", gen.cfg.lane_width, "lane width in meters");
  gen_cmd->add_option("--speed-min", gen.cfg.speed_min, "minimum cruise speed");
  gen_cmd->add_option("--speed-max", gen.cfg.speed_max, "maximum cruise speed");
  gen_cmd->add_option("--lane-change-prob", gen.cfg.lane_change_prob, "lane change probability");
  gen_cmd->add_option("--stop-go-prob", gen.cfg.stop_and_go_prob, "stop-and-go probability");
  gen_cmd->add_flag("--no-labels", gen.no_labels, "skip occupancy label generation");

  TrainArgs train;
  CLI::App * train_cmd = app.add_subcommand("train", "train a model on a dataset directory");
  train_cmd->add_option("--data", train.data, "dataset directory")->required();
  train_cmd->add_option("--out", train.out, "output directory for checkpoint and log")->required();
  train_cmd->add_option("--config", train.config_path, "JSON config file with model/loss/train sections");
  train_cmd->add_option("--resume", train.resume_path, "checkpoint to resume from");
  train_cmd->add_option("--steps", train.max_steps, "cap on steps to run in this invocation");
  train_cmd->add_option("--seed", "training seed")->expected(1);
  train_cmd->add_option("--total-steps", "schedule length in steps")->expected(1);
  train_cmd->add_option("--batch-size", "scenes per step")->expected(1);
  train_cmd->add_option("--lr0", "initial learning rate")->expected(1);
  train_cmd->add_option("--lr-min", "final learning rate")->expected(1);
  train_cmd->add_option("--weight-decay", "decoupled weight decay")->expected(1);
  train_cmd->add_option("--grad-clip", "global gradient norm cap")->expected(1);
  train_cmd->add_option("--checkpoint-every", "periodic checkpoint interval")->expected(1);
  train_cmd->add_option("--precision", train.precision, "single | double");
  train_cmd->add_option("--d-model", "feature width")->expected(1);
  train_cmd->add_option("--n-heads", "attention heads")->expected(1);
  train_cmd->add_option("--n-modes", "trajectory modes")->expected(1);
  train_cmd->add_option("--n-keyframes", "decoder segments")->expected(1);
  train_cmd->add_flag("--no-refinement", train.no_refinement, "disable the refinement stage");
  train_cmd->add_flag("--no-lof", train.no_lof, "disable the occupancy branch");

  EvalArgs eval;
  CLI::App * eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--ckpt", eval.ckpt, "checkpoint path")->required();
  eval_cmd->add_option("--data", eval.data, "dataset directory")->required();
  eval_cmd->add_option("--report", eval.report_path, "report JSON path (default: stdout)");
  eval_cmd->add_option("--csv", eval.csv_path, "also write the occupancy grid as CSV");
  eval_cmd->add_option("--lof-thresholds", eval.cfg.render_thresholds, "render thresholds in meters")
    ->delimiter(',');
  eval_cmd->add_option("--iou-threshold", eval.cfg.iou_threshold, "occupancy binarization threshold");
  eval_cmd->add_option("--auc-thresholds", eval.cfg.auc_thresholds, "PR curve threshold count");
  eval_cmd
    ->add_option_function<std::string>(
      "--precision", [&](const std::string & s) { eval.cfg.precision = fn::precision_from_string(s); },
      "single | double")
    ->expected(1);

  PredictArgs predict;
  CLI::App * predict_cmd = app.add_subcommand("predict", "forecast one scene with a checkpoint");
  predict_cmd->add_option("--ckpt", predict.ckpt, "checkpoint path")->required();
  predict_cmd->add_option("--scene", predict.scene_path, "scene JSON path")->required();
  predict_cmd->add_option("--out", predict.out, "forecast JSON output path")->required();

  PlotArgs plot;
  CLI::App * plot_cmd = app.add_subcommand("plot", "render a scene (and forecast) to SVG or PNG");
  plot_cmd->add_option("--scene", plot.scene_path, "scene JSON path")->required();
  plot_cmd->add_option("--forecast", plot.forecast_path, "forecast JSON to overlay");
  plot_cmd->add_option("--out", plot.out, "output file (.svg or .png)")->required();
  plot_cmd->add_option("--keyframe", plot.options.lof_keyframe, "occupancy keyframe index to color by");
  plot_cmd->add_option("--width", plot.options.width, "figure width in pixels");
  plot_cmd->add_option("--height", plot.options.height, "figure height in pixels");

  try {
    // Environment seed sits between config-file values and explicit flags;
    // for gen there is no config file, so it just precedes the flag.
    if (const auto seed = env_seed()) gen.cfg.seed = *seed;
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const fn::ConfigError & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (gen_cmd->parsed()) return run_gen(gen);
    if (train_cmd->parsed()) return run_train(train_cmd, train);
    if (eval_cmd->parsed()) return run_eval(eval);
    if (predict_cmd->parsed()) return run_predict(predict);
    if (plot_cmd->parsed()) return run_plot(plot);
    std::cerr << "error: no command selected\n";
    return 2;
  } catch (const fn::CheckpointError & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const fn::ConfigError & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fn::IoError & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const fn::DataError & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

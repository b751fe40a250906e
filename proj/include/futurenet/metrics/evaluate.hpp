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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "futurenet/lof/labels.hpp"
#include "futurenet/metrics/metrics.hpp"
#include "futurenet/scene/dataset.hpp"
#include "futurenet/train/trainer.hpp"

namespace futurenet {

struct EvalConfig {
  double iou_threshold = 0.7;
  std::int64_t auc_thresholds = 100;
  std::vector<double> render_thresholds = {1.0, 2.0, 3.0, 4.0};
  Precision precision = Precision::kDouble;

  void validate() const {
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
      throw ConfigError("IoU threshold must lie in (0, 1)");
    }
    if (auc_thresholds < 2) throw ConfigError("PR curve needs at least 2 thresholds");
    for (double th : render_thresholds) {
      if (!(th > 0.0)) throw ConfigError("render thresholds must be positive");
    }
  }
};

namespace eval_detail {

/// Occupancy values pooled across scenes, one pool per keyframe.
struct LofPool {
  std::vector<std::vector<double>> predicted;          // [n_kf][pooled points]
  std::vector<std::vector<int>> labels;                // [n_kf][pooled points]
  std::vector<std::vector<std::vector<int>>> rendered;  // [n_th][n_kf][pooled points]
};

template <typename T>
void eval_one_scene(
  const ModelConfig & cfg, ParamStore & ps, const SceneRecord & rec, const EvalConfig & ecfg,
  MetricAccumulator & ade1, MetricAccumulator & adek, MetricAccumulator & fde1,
  MetricAccumulator & fdek, MetricAccumulator & brierk, MetricAccumulator & mr1,
  MetricAccumulator & mrk, std::vector<MultiWorldMetrics> & worlds, LofPool & pool) {
  check_scene_horizons(rec.scene, cfg);
  const EncoderPlan plan = make_encoder_plan(rec.scene, cfg);
  Graph<T> g;
  const BoundParams bound = ps.bind(g);
  const DecodeOutputs<T> out = forward_scene(g, bound, cfg, plan);
  const TrajectoryForecast fc = to_forecast(g, out);
  const FutureTargets gt = make_future_targets(rec.scene);

  accumulate_min_ade(fc, gt, 1, ade1);
  accumulate_min_ade(fc, gt, cfg.n_modes, adek);
  accumulate_min_fde(fc, gt, 1, fde1);
  accumulate_min_fde(fc, gt, cfg.n_modes, fdek);
  accumulate_brier_min_fde(fc, gt, cfg.n_modes, brierk);
  accumulate_miss_rate(fc, gt, 1, mr1);
  accumulate_miss_rate(fc, gt, cfg.n_modes, mrk);

  const MultiWorldMetrics mw = multi_world_metrics(fc, gt);
  if (mw.defined()) worlds.push_back(mw);

  if (!cfg.use_lof) return;
  const LaneOccupancyField field = to_lof(g, out);
  const std::vector<std::int64_t> steps = keyframe_steps_for(cfg.t_future, cfg.n_keyframes);
  const LofLabels labels = ensure_labels(rec.scene, rec.labels, steps);
  const auto n_kf = static_cast<std::size_t>(cfg.n_keyframes);
  if (pool.predicted.empty()) {
    pool.predicted.resize(n_kf);
    pool.labels.resize(n_kf);
    pool.rendered.assign(ecfg.render_thresholds.size(), std::vector<std::vector<int>>(n_kf));
  }
  for (std::size_t kf = 0; kf < n_kf; ++kf) {
    const auto & row_labels = labels.values[kf];
    for (std::size_t i = 0; i < row_labels.size(); ++i) {
      pool.predicted[kf].push_back(field.values.at(static_cast<std::int64_t>(kf),
                                                   static_cast<std::int64_t>(i)));
      pool.labels[kf].push_back(row_labels[i]);
    }
  }
  for (std::size_t t = 0; t < ecfg.render_thresholds.size(); ++t) {
    const auto rendered =
      render_lof_from_trajectories(fc.means, rec.scene.points, ecfg.render_thresholds[t], steps);
    for (std::size_t kf = 0; kf < n_kf; ++kf) {
      for (int v : rendered[kf]) pool.rendered[t][kf].push_back(v);
    }
  }
}

}  // namespace eval_detail

/// Full-dataset evaluation report. Scene failures are recorded and skipped;
/// every aggregate pools per-agent (trajectory) or per-point (occupancy)
/// contributions across the surviving scenes.
inline nlohmann::json evaluate_dataset(
  const ModelConfig & cfg, ParamStore & ps, const std::vector<SceneRecord> & records,
  const EvalConfig & ecfg = {}) {
  cfg.validate();
  ecfg.validate();

  MetricAccumulator ade1, adek, fde1, fdek, brierk, mr1, mrk;
  std::vector<MultiWorldMetrics> worlds;
  eval_detail::LofPool pool;
  nlohmann::json failures = nlohmann::json::array();
  std::int64_t n_ok = 0;

  for (const auto & rec : records) {
    try {
      if (ecfg.precision == Precision::kDouble) {
        eval_detail::eval_one_scene<double>(
          cfg, ps, rec, ecfg, ade1, adek, fde1, fdek, brierk, mr1, mrk, worlds, pool);
      } else {
        eval_detail::eval_one_scene<float>(
          cfg, ps, rec, ecfg, ade1, adek, fde1, fdek, brierk, mr1, mrk, worlds, pool);
      }
      n_ok += 1;
    } catch (const std::exception & e) {
      failures.push_back(nlohmann::json{{"scene", rec.path}, {"error", e.what()}});
    }
  }

  nlohmann::json report{{"n_scenes", n_ok}, {"failures", failures}};
  if (n_ok == 0) return report;

  report["trajectory"] = nlohmann::json{
    {"k", cfg.n_modes},
    {"n_agents", fdek.count},
    {"min_ade_1", ade1.mean()},
    {"min_ade_k", adek.mean()},
    {"min_fde_1", fde1.mean()},
    {"min_fde_k", fdek.mean()},
    {"brier_min_fde_k", brierk.mean()},
    {"miss_rate_1", mr1.mean()},
    {"miss_rate_k", mrk.mean()}};

  if (!worlds.empty()) {
    double fde = 0.0, ade = 0.0, brier = 0.0, mr = 0.0;
    for (const auto & w : worlds) {
      fde += w.avg_min_fde;
      ade += w.avg_min_ade;
      brier += w.avg_brier_min_fde;
      mr += w.actor_mr;
    }
    const double inv = 1.0 / static_cast<double>(worlds.size());
    report["multi_world"] = nlohmann::json{
      {"n_scenes", worlds.size()},
      {"avg_min_fde", fde * inv},
      {"avg_min_ade", ade * inv},
      {"avg_brier_min_fde", brier * inv},
      {"actor_mr", mr * inv},
      {"world_prob_convention", "uniform"}};
  }

  if (cfg.use_lof && !pool.predicted.empty()) {
    const std::vector<std::int64_t> steps = keyframe_steps_for(cfg.t_future, cfg.n_keyframes);
    nlohmann::json per_kf = nlohmann::json::array();
    for (std::size_t kf = 0; kf < pool.predicted.size(); ++kf) {
      const auto auc = lof_auc(pool.predicted[kf], pool.labels[kf], ecfg.auc_thresholds);
      nlohmann::json entry{
        {"keyframe_step", steps[kf]},
        {"n_points", pool.predicted[kf].size()},
        {"iou", lof_iou(pool.predicted[kf], pool.labels[kf], ecfg.iou_threshold)},
        {"iou_threshold", ecfg.iou_threshold}};
      if (auc.has_value()) {
        entry["auc"] = *auc;
      } else {
        entry["auc"] = nullptr;
        entry["auc_undefined"] = "labels contain no positives";
      }
      per_kf.push_back(std::move(entry));
    }

    nlohmann::json baseline = nlohmann::json::array();
    for (std::size_t t = 0; t < ecfg.render_thresholds.size(); ++t) {
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t kf = 0; kf < pool.rendered[t].size(); ++kf) {
        std::vector<double> as_prob(pool.rendered[t][kf].begin(), pool.rendered[t][kf].end());
        rows.push_back(nlohmann::json{
          {"keyframe_step", steps[kf]},
          {"iou", lof_iou(as_prob, pool.labels[kf], 0.5)}});
      }
      baseline.push_back(nlohmann::json{
        {"render_threshold_m", ecfg.render_thresholds[t]}, {"per_keyframe", std::move(rows)}});
    }
    report["lof"] =
      nlohmann::json{{"per_keyframe", std::move(per_kf)}, {"baseline_render", std::move(baseline)}};
  }
  return report;
}

/// Occupancy grid of the report as CSV: one row per keyframe, columns for
/// the learned field's IoU/AUC and each rendered baseline's IoU.
inline std::string report_lof_csv(const nlohmann::json & report) {
  std::string csv = "keyframe_step,learned_iou,learned_auc";
  if (!report.contains("lof")) return csv + "\n";
  const auto & lof = report.at("lof");
  for (const auto & b : lof.at("baseline_render")) {
    csv += ",render_iou_" + std::to_string(b.at("render_threshold_m").get<double>()).substr(0, 4);
  }
  csv += "\n";
  const auto & per_kf = lof.at("per_keyframe");
  for (std::size_t kf = 0; kf < per_kf.size(); ++kf) {
    const auto & row = per_kf[kf];
    csv += std::to_string(row.at("keyframe_step").get<std::int64_t>());
    csv += "," + nlohmann::json(row.at("iou")).dump();
    csv += "," + (row.at("auc").is_null() ? std::string("nan") : nlohmann::json(row.at("auc")).dump());
    for (const auto & b : lof.at("baseline_render")) {
      csv += "," + nlohmann::json(b.at("per_keyframe")[kf].at("iou")).dump();
    }
    csv += "\n";
  }
  return csv;
}

}  // namespace futurenet

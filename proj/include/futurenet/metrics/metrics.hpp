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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "futurenet/core/error.hpp"
#include "futurenet/model/outputs.hpp"
#include "futurenet/objectives/targets.hpp"

namespace futurenet {

/// Running mean over evaluated agents, poolable across scenes.
struct MetricAccumulator {
  double sum = 0.0;
  std::int64_t count = 0;

  void add(double v) {
    sum += v;
    count += 1;
  }
  void merge(const MetricAccumulator & other) {
    sum += other.sum;
    count += other.count;
  }
  double mean() const { return count > 0 ? sum / static_cast<double>(count) : 0.0; }
};

namespace metric_detail {

inline void check_k(const TrajectoryForecast & f, std::int64_t k) {
  const std::int64_t n_modes = f.means.shape()[1];
  if (k < 1 || k > n_modes) throw ConfigError("mode count k must lie in [1, K]");
}

/// Mode indices of agent `a` ordered by descending probability; equal
/// probabilities keep the lower index first.
inline std::vector<std::int64_t> top_modes(
  const TrajectoryForecast & f, std::int64_t a, std::int64_t k) {
  const std::int64_t n_modes = f.means.shape()[1];
  std::vector<std::int64_t> order(static_cast<std::size_t>(n_modes));
  for (std::int64_t i = 0; i < n_modes; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::int64_t lhs, std::int64_t rhs) {
    return f.probs.at(a, lhs) > f.probs.at(a, rhs);
  });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

inline double step_error(
  const TrajectoryForecast & f, const FutureTargets & gt, std::int64_t a, std::int64_t mode,
  std::int64_t t) {
  const double dx = f.means.at(a, mode, t, 0) - gt.pos.at(a, t, 0);
  const double dy = f.means.at(a, mode, t, 1) - gt.pos.at(a, t, 1);
  return std::sqrt(dx * dx + dy * dy);
}

/// Mean displacement over the agent's valid steps, or nothing if none.
inline std::optional<double> mode_ade(
  const TrajectoryForecast & f, const FutureTargets & gt, std::int64_t a, std::int64_t mode) {
  double sum = 0.0;
  std::int64_t n = 0;
  for (std::int64_t t = 0; t < gt.horizon; ++t) {
    if (gt.valid.at(a, t) == 0.0) continue;
    sum += step_error(f, gt, a, mode, t);
    n += 1;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

inline bool final_step_valid(const FutureTargets & gt, std::int64_t a) {
  return gt.horizon > 0 && gt.valid.at(a, gt.horizon - 1) != 0.0;
}

/// (endpoint error, mode) of the best of the given modes; first mode wins ties.
inline std::pair<double, std::int64_t> best_endpoint(
  const TrajectoryForecast & f, const FutureTargets & gt, std::int64_t a,
  const std::vector<std::int64_t> & modes) {
  double best = 0.0;
  std::int64_t best_mode = -1;
  for (std::int64_t mode : modes) {
    const double e = step_error(f, gt, a, mode, gt.horizon - 1);
    if (best_mode < 0 || e < best) {
      best = e;
      best_mode = mode;
    }
  }
  return {best, best_mode};
}

}  // namespace metric_detail

/// Best-of-k mean displacement, where the k highest-probability modes
/// compete. Adds one value per agent with at least one valid future step.
inline void accumulate_min_ade(
  const TrajectoryForecast & f, const FutureTargets & gt, std::int64_t k,
  MetricAccumulator & acc) {
  metric_detail::check_k(f, k);
  for (std::int64_t a = 0; a < gt.n_agents; ++a) {
    std::optional<double> best;
    for (std::int64_t mode : metric_detail::top_modes(f, a, k)) {
      const auto ade = metric_detail::mode_ade(f, gt, a, mode);
      if (ade && (!best || *ade < *best)) best = ade;
    }
    if (best) acc.add(*best);
  }
}

/// Best-of-k endpoint displacement. Agents whose final step lacks ground
/// truth are excluded.
inline void accumulate_min_fde(
  const TrajectoryForecast & f, const FutureTargets & gt, std::int64_t k,
  MetricAccumulator & acc) {
  metric_detail::check_k(f, k);
  for (std::int64_t a = 0; a < gt.n_agents; ++a) {
    if (!metric_detail::final_step_valid(gt, a)) continue;
    const auto [err, mode] = metric_detail::best_endpoint(f, gt, a, metric_detail::top_modes(f, a, k));
    (void)mode;
    acc.add(err);
  }
}

/// Best-of-k endpoint displacement plus (1 - p_best)^2, where p_best is the
/// probability of the mode achieving the minimum.
inline void accumulate_brier_min_fde(
  const TrajectoryForecast & f, const FutureTargets & gt, std::int64_t k,
  MetricAccumulator & acc) {
  metric_detail::check_k(f, k);
  for (std::int64_t a = 0; a < gt.n_agents; ++a) {
    if (!metric_detail::final_step_valid(gt, a)) continue;
    const auto [err, mode] = metric_detail::best_endpoint(f, gt, a, metric_detail::top_modes(f, a, k));
    const double p = f.probs.at(a, mode);
    acc.add(err + (1.0 - p) * (1.0 - p));
  }
}

/// Fraction of evaluated agents whose best-of-k endpoint error exceeds 2 m
/// (strictly; an error of exactly 2.0 m is not a miss).
inline void accumulate_miss_rate(
  const TrajectoryForecast & f, const FutureTargets & gt, std::int64_t k,
  MetricAccumulator & acc) {
  metric_detail::check_k(f, k);
  for (std::int64_t a = 0; a < gt.n_agents; ++a) {
    if (!metric_detail::final_step_valid(gt, a)) continue;
    const auto [err, mode] = metric_detail::best_endpoint(f, gt, a, metric_detail::top_modes(f, a, k));
    (void)mode;
    acc.add(err > 2.0 ? 1.0 : 0.0);
  }
}

inline double min_ade(const TrajectoryForecast & f, const FutureTargets & gt, std::int64_t k) {
  MetricAccumulator acc;
  accumulate_min_ade(f, gt, k, acc);
  return acc.mean();
}

inline double min_fde(const TrajectoryForecast & f, const FutureTargets & gt, std::int64_t k) {
  MetricAccumulator acc;
  accumulate_min_fde(f, gt, k, acc);
  return acc.mean();
}

inline double brier_min_fde(
  const TrajectoryForecast & f, const FutureTargets & gt, std::int64_t k) {
  MetricAccumulator acc;
  accumulate_brier_min_fde(f, gt, k, acc);
  return acc.mean();
}

inline double miss_rate(const TrajectoryForecast & f, const FutureTargets & gt, std::int64_t k) {
  MetricAccumulator acc;
  accumulate_miss_rate(f, gt, k, acc);
  return acc.mean();
}

/// Soft intersection-over-union of a probabilistic occupancy field against
/// binary labels: sum(1[O > th] * label) / sum(O + label - O * label). Both
/// sides empty counts as perfect agreement (1.0).
inline double lof_iou(
  const std::vector<double> & predicted, const std::vector<int> & labels, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("IoU threshold must lie in (0, 1)");
  if (predicted.size() != labels.size()) {
    throw DataError("occupancy prediction and label sizes differ");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double o = predicted[i];
    const double l = labels[i] != 0 ? 1.0 : 0.0;
    if (o > threshold) num += l;
    den += o + l - o * l;
  }
  if (den == 0.0) return 1.0;
  return num / den;
}

/// Area under the precision-recall curve of the occupancy field, estimated
/// from linearly spaced binarization thresholds over [0, 1]. Thresholds that
/// admit no predicted positives are skipped; points are sorted by recall and
/// integrated by trapezoid after prepending the (recall 0, precision 1)
/// boundary. Returns nothing when the labels contain no positives.
inline std::optional<double> lof_auc(
  const std::vector<double> & predicted, const std::vector<int> & labels,
  std::int64_t n_thresholds = 100) {
  if (n_thresholds < 2) throw ConfigError("PR curve needs at least 2 thresholds");
  if (predicted.size() != labels.size()) {
    throw DataError("occupancy prediction and label sizes differ");
  }
  std::int64_t positives = 0;
  for (int l : labels) positives += l != 0 ? 1 : 0;
  if (positives == 0) return std::nullopt;

  std::vector<std::pair<double, double>> points;  // (recall, precision)
  for (std::int64_t i = 0; i < n_thresholds; ++i) {
    const double th = static_cast<double>(i) / static_cast<double>(n_thresholds - 1);
    std::int64_t tp = 0, fp = 0;
    for (std::size_t j = 0; j < predicted.size(); ++j) {
      if (predicted[j] > th) {
        if (labels[j] != 0) {
          tp += 1;
        } else {
          fp += 1;
        }
      }
    }
    if (tp + fp == 0) continue;
    points.emplace_back(
      static_cast<double>(tp) / static_cast<double>(positives),
      static_cast<double>(tp) / static_cast<double>(tp + fp));
  }
  std::stable_sort(points.begin(), points.end(), [](const auto & lhs, const auto & rhs) {
    return lhs.first < rhs.first;
  });
  double area = 0.0;
  double prev_r = 0.0, prev_p = 1.0;
  for (const auto & [r, p] : points) {
    area += (r - prev_r) * (p + prev_p) * 0.5;
    prev_r = r;
    prev_p = p;
  }
  return area;
}

/// Scene-level aggregates under the "one mode index = one world" assignment:
/// world k consists of the k-th mode of every agent, and worlds compete as
/// units. World probabilities are uniform 1/K, recorded in `world_prob`.
struct MultiWorldMetrics {
  double avg_min_fde = 0.0;
  double avg_min_ade = 0.0;
  double avg_brier_min_fde = 0.0;
  double actor_mr = 0.0;
  std::int64_t best_world = -1;
  double world_prob = 0.0;
  std::int64_t n_fde_agents = 0;
  std::int64_t n_ade_agents = 0;
  bool defined() const { return n_fde_agents > 0; }
};

inline MultiWorldMetrics multi_world_metrics(
  const TrajectoryForecast & f, const FutureTargets & gt) {
  const std::int64_t n_modes = f.means.shape()[1];
  MultiWorldMetrics m;
  m.world_prob = 1.0 / static_cast<double>(n_modes);

  std::vector<std::int64_t> fde_agents, ade_agents;
  for (std::int64_t a = 0; a < gt.n_agents; ++a) {
    if (metric_detail::final_step_valid(gt, a)) fde_agents.push_back(a);
    if (gt.has_any[static_cast<std::size_t>(a)]) ade_agents.push_back(a);
  }
  m.n_fde_agents = static_cast<std::int64_t>(fde_agents.size());
  m.n_ade_agents = static_cast<std::int64_t>(ade_agents.size());
  if (m.n_fde_agents == 0) return m;

  double best_fde = 0.0, best_ade = 0.0;
  for (std::int64_t k = 0; k < n_modes; ++k) {
    double fde_sum = 0.0;
    for (std::int64_t a : fde_agents) {
      fde_sum += metric_detail::step_error(f, gt, a, k, gt.horizon - 1);
    }
    const double fde_mean = fde_sum / static_cast<double>(m.n_fde_agents);
    if (m.best_world < 0 || fde_mean < best_fde) {
      best_fde = fde_mean;
      m.best_world = k;
    }
    if (!ade_agents.empty()) {
      double ade_sum = 0.0;
      for (std::int64_t a : ade_agents) ade_sum += *metric_detail::mode_ade(f, gt, a, k);
      const double ade_mean = ade_sum / static_cast<double>(m.n_ade_agents);
      if (k == 0 || ade_mean < best_ade) best_ade = ade_mean;
    }
  }
  m.avg_min_fde = best_fde;
  m.avg_min_ade = best_ade;
  m.avg_brier_min_fde = best_fde + (1.0 - m.world_prob) * (1.0 - m.world_prob);

  std::int64_t misses = 0;
  for (std::int64_t a : fde_agents) {
    if (metric_detail::step_error(f, gt, a, m.best_world, gt.horizon - 1) > 2.0) misses += 1;
  }
  m.actor_mr = static_cast<double>(misses) / static_cast<double>(m.n_fde_agents);
  return m;
}

}  // namespace futurenet

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
#include <vector>

#include "futurenet/core/error.hpp"
#include "futurenet/core/tensor.hpp"
#include "futurenet/scene/json_io.hpp"
#include "futurenet/scene/scene.hpp"

namespace futurenet {

/// Keyframe steps for a horizon of T future steps split into n_kf segments:
/// {T/n_kf, 2*T/n_kf, ..., T}, as 1-indexed future steps.
inline std::vector<std::int64_t> keyframe_steps_for(std::int64_t t_future, std::int64_t n_keyframes) {
  if (n_keyframes < 1) throw ConfigError("n_keyframes must be >= 1");
  if (t_future % n_keyframes != 0) {
    throw ConfigError(
      "future horizon " + std::to_string(t_future) + " not divisible by n_keyframes " +
      std::to_string(n_keyframes));
  }
  std::vector<std::int64_t> steps;
  const std::int64_t seg = t_future / n_keyframes;
  for (std::int64_t k = 1; k <= n_keyframes; ++k) steps.push_back(k * seg);
  return steps;
}

/// Ground-truth occupancy labels from agent futures: values[kf][i] = 1 iff
/// some agent with a valid state at keyframe step kf is within `threshold`
/// meters (inclusive) of map point i. No valid futures => all zeros.
inline LofLabels generate_lof_labels(
  const Scene & scene, double threshold, const std::vector<std::int64_t> & keyframe_steps) {
  if (!(threshold > 0.0)) throw ConfigError("lof label threshold must be positive");
  LofLabels labels;
  labels.threshold = threshold;
  labels.keyframe_steps = keyframe_steps;
  const double r2 = threshold * threshold;
  const std::int64_t t_f = scene.future_len();
  for (auto step : keyframe_steps) {
    if (step < 1 || step > t_f) {
      throw ConfigError(
        "keyframe step " + std::to_string(step) + " outside future horizon " + std::to_string(t_f));
    }
    std::vector<int> row(scene.points.size(), 0);
    for (const auto & fut : scene.futures) {
      const AgentState & st = fut.states[static_cast<std::size_t>(step - 1)];
      if (!st.valid) continue;
      for (std::size_t i = 0; i < scene.points.size(); ++i) {
        const double dx = scene.points[i].pose.x - st.pose.x;
        const double dy = scene.points[i].pose.y - st.pose.y;
        if (dx * dx + dy * dy <= r2) row[i] = 1;
      }
    }
    labels.values.push_back(std::move(row));
  }
  return labels;
}

/// Labels on the given keyframe grid: stored labels are reused when their
/// grid matches, otherwise labels are recomputed from the scene futures with
/// the stored (or default 2 m) proximity threshold.
inline LofLabels ensure_labels(
  const Scene & scene, const std::optional<LofLabels> & stored,
  const std::vector<std::int64_t> & keyframe_steps) {
  if (stored.has_value() && stored->keyframe_steps == keyframe_steps) return *stored;
  const double threshold = stored.has_value() ? stored->threshold : 2.0;
  return generate_lof_labels(scene, threshold, keyframe_steps);
}

/// Occupancy rendered from predicted trajectories with the same proximity
/// rule: a point is occupied at keyframe kf when any mode of any agent puts
/// that agent within `threshold` of it at that step (union over modes).
inline std::vector<std::vector<int>> render_lof_from_trajectories(
  const Tensor<double> & means, const std::vector<MapPoint> & points, double threshold,
  const std::vector<std::int64_t> & keyframe_steps) {
  if (means.rank() != 4 || means.dim(3) != 2) {
    throw ConfigError("trajectory means must have shape [N_A, K, T, 2]");
  }
  const std::int64_t n_agents = means.dim(0);
  const std::int64_t n_modes = means.dim(1);
  const std::int64_t horizon = means.dim(2);
  const double r2 = threshold * threshold;

  std::vector<std::vector<int>> values;
  for (auto step : keyframe_steps) {
    if (step < 1 || step > horizon) {
      throw ConfigError("keyframe step " + std::to_string(step) + " outside predicted horizon");
    }
    std::vector<int> row(points.size(), 0);
    for (std::int64_t a = 0; a < n_agents; ++a) {
      for (std::int64_t k = 0; k < n_modes; ++k) {
        const double px = means.at(a, k, step - 1, 0);
        const double py = means.at(a, k, step - 1, 1);
        for (std::size_t i = 0; i < points.size(); ++i) {
          const double dx = points[i].pose.x - px;
          const double dy = points[i].pose.y - py;
          if (dx * dx + dy * dy <= r2) row[i] = 1;
        }
      }
    }
    values.push_back(std::move(row));
  }
  return values;
}

}  // namespace futurenet

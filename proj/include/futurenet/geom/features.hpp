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

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "futurenet/core/error.hpp"
#include "futurenet/core/tensor.hpp"
#include "futurenet/geom/descriptors.hpp"
#include "futurenet/scene/scene.hpp"

namespace futurenet {

inline constexpr int kAgentFeatureDim = 8;
inline constexpr int kPointFeatureDim = 5;
inline constexpr int kPolygonFeatureDim = 3;

/// Scene map geometry flattened into index space. Point and polygon rows keep
/// the order they appear in the scene; ids are resolved to indices once here.
struct SceneIndex {
  std::unordered_map<std::int64_t, std::int64_t> point_row;
  std::unordered_map<std::int64_t, std::int64_t> polygon_row;
  std::vector<std::int64_t> point_polygon;          // polygon row per point row
  std::vector<std::int64_t> point_next;             // next point row in kind run, -1 at run end
  std::vector<std::vector<std::int64_t>> centerline_rows;  // per polygon row

  explicit SceneIndex(const Scene & scene) {
    point_row.reserve(scene.points.size());
    for (std::size_t i = 0; i < scene.points.size(); ++i) {
      point_row.emplace(scene.points[i].point_id, static_cast<std::int64_t>(i));
    }
    polygon_row.reserve(scene.polygons.size());
    for (std::size_t i = 0; i < scene.polygons.size(); ++i) {
      polygon_row.emplace(scene.polygons[i].polygon_id, static_cast<std::int64_t>(i));
    }
    point_polygon.assign(scene.points.size(), -1);
    point_next.assign(scene.points.size(), -1);
    centerline_rows.resize(scene.polygons.size());
    for (std::size_t pi = 0; pi < scene.polygons.size(); ++pi) {
      const auto & poly = scene.polygons[pi];
      std::int64_t prev = -1;
      PointKind prev_kind = PointKind::kCenterline;
      for (auto pid : poly.point_ids) {
        const auto it = point_row.find(pid);
        if (it == point_row.end()) throw DataError("polygon references unknown point");
        const std::int64_t row = it->second;
        point_polygon[static_cast<std::size_t>(row)] = static_cast<std::int64_t>(pi);
        const PointKind kind = scene.points[static_cast<std::size_t>(row)].kind;
        if (prev >= 0 && prev_kind == kind) {
          point_next[static_cast<std::size_t>(prev)] = row;
        }
        if (kind == PointKind::kCenterline) {
          centerline_rows[pi].push_back(row);
        }
        prev = row;
        prev_kind = kind;
      }
    }
  }
};

/// Per-state motion features for one agent, [n_states, 8]:
/// step displacement, step heading change, speed, velocity bearing relative
/// to heading, category one-hot (3), valid flag. Rows for invalid states and
/// motion terms without a valid predecessor are zero. All entries are
/// unchanged by rigid transforms of the scene.
inline Tensor<double> agent_state_features(const AgentHistory & agent) {
  const auto n = static_cast<std::int64_t>(agent.states.size());
  Tensor<double> f = Tensor<double>::zeros({n, kAgentFeatureDim});
  for (std::int64_t t = 0; t < n; ++t) {
    const AgentState & st = agent.states[static_cast<std::size_t>(t)];
    if (!st.valid) continue;
    const AgentState * prev =
      t > 0 && agent.states[static_cast<std::size_t>(t - 1)].valid
        ? &agent.states[static_cast<std::size_t>(t - 1)]
        : nullptr;
    if (prev != nullptr) {
      const double dx = st.pose.x - prev->pose.x;
      const double dy = st.pose.y - prev->pose.y;
      f.at(t, 0) = std::sqrt(dx * dx + dy * dy);
      f.at(t, 1) = wrap_angle(st.pose.heading - prev->pose.heading);
    }
    const double speed = std::sqrt(st.vx * st.vx + st.vy * st.vy);
    f.at(t, 2) = speed;
    f.at(t, 3) = speed > 1e-9 ? wrap_angle(std::atan2(st.vy, st.vx) - st.pose.heading) : 0.0;
    f.at(t, 4 + static_cast<int>(agent.category)) = 1.0;
    f.at(t, 7) = 1.0;
  }
  return f;
}

/// Per-point features, [n_points, 5]: distance to the next point of the same
/// polyline run, heading turn to that point, point kind one-hot (3).
inline Tensor<double> map_point_features(const Scene & scene, const SceneIndex & index) {
  const auto n = static_cast<std::int64_t>(scene.points.size());
  Tensor<double> f = Tensor<double>::zeros({n, kPointFeatureDim});
  for (std::int64_t i = 0; i < n; ++i) {
    const MapPoint & pt = scene.points[static_cast<std::size_t>(i)];
    const std::int64_t next = index.point_next[static_cast<std::size_t>(i)];
    if (next >= 0) {
      const MapPoint & np = scene.points[static_cast<std::size_t>(next)];
      const double dx = np.pose.x - pt.pose.x;
      const double dy = np.pose.y - pt.pose.y;
      f.at(i, 0) = std::sqrt(dx * dx + dy * dy);
      f.at(i, 1) = wrap_angle(np.pose.heading - pt.pose.heading);
    }
    f.at(i, 2 + static_cast<int>(pt.kind)) = 1.0;
  }
  return f;
}

/// Per-polygon features, [n_polygons, 3]: kind one-hot (2), centerline length.
inline Tensor<double> map_polygon_features(const Scene & scene, const SceneIndex & index) {
  const auto n = static_cast<std::int64_t>(scene.polygons.size());
  Tensor<double> f = Tensor<double>::zeros({n, kPolygonFeatureDim});
  for (std::int64_t i = 0; i < n; ++i) {
    f.at(i, static_cast<int>(scene.polygons[static_cast<std::size_t>(i)].kind)) = 1.0;
    double length = 0.0;
    const auto & rows = index.centerline_rows[static_cast<std::size_t>(i)];
    for (std::size_t k = 1; k < rows.size(); ++k) {
      const auto & a = scene.points[static_cast<std::size_t>(rows[k - 1])].pose;
      const auto & b = scene.points[static_cast<std::size_t>(rows[k])].pose;
      length += std::hypot(b.x - a.x, b.y - a.y);
    }
    f.at(i, 2) = length;
  }
  return f;
}

/// Anchors for every map point (timeless).
inline std::vector<Anchor> map_point_anchors(const Scene & scene) {
  std::vector<Anchor> anchors;
  anchors.reserve(scene.points.size());
  for (const auto & pt : scene.points) anchors.push_back(anchor_of(pt.pose));
  return anchors;
}

/// Anchors for every polygon entry pose (timeless).
inline std::vector<Anchor> polygon_anchors(const Scene & scene) {
  std::vector<Anchor> anchors;
  anchors.reserve(scene.polygons.size());
  for (const auto & poly : scene.polygons) anchors.push_back(anchor_of(poly.entry_pose));
  return anchors;
}

/// Anchors for one agent's observed states, stamped with their step indices.
inline std::vector<Anchor> agent_state_anchors(const AgentHistory & agent) {
  std::vector<Anchor> anchors;
  anchors.reserve(agent.states.size());
  for (const auto & st : agent.states) anchors.push_back(anchor_of(st.pose, st.step_index));
  return anchors;
}

}  // namespace futurenet

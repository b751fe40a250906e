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
#include <optional>
#include <string>
#include <vector>

#include "futurenet/core/error.hpp"

namespace futurenet {

// Desk-scale capacity bounds. Scenes beyond these are rejected up front so the
// dense per-scene attention stays controllable on one core.
inline constexpr std::int64_t kMaxAgents = 16;
inline constexpr std::int64_t kMaxPolygons = 64;
inline constexpr std::int64_t kMaxPoints = 800;

/// Wrap an angle into (-pi, pi], with -pi mapping to pi. In-range values are
/// returned bit-for-bit unchanged, which keeps identity transforms exact.
inline double wrap_angle(double h) {
  if (h > -M_PI && h <= M_PI) return h;
  double r = std::fmod(h + M_PI, 2.0 * M_PI);
  if (r <= 0.0) r += 2.0 * M_PI;
  return r - M_PI;
}

/// SE(2) pose: position plus heading in radians, heading in (-pi, pi].
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

/// Treating a Pose2 as a rigid transform: rotate by `g.heading` about the
/// origin, then translate by `(g.x, g.y)`.
inline Pose2 transform_pose(const Pose2 & g, const Pose2 & p) {
  const double c = std::cos(g.heading);
  const double s = std::sin(g.heading);
  return Pose2{
    g.x + c * p.x - s * p.y,
    g.y + s * p.x + c * p.y,
    wrap_angle(p.heading + g.heading)};
}

/// Composition: applying `compose(a, b)` equals applying `b`, then `a`.
inline Pose2 compose(const Pose2 & a, const Pose2 & b) {
  const double c = std::cos(a.heading);
  const double s = std::sin(a.heading);
  return Pose2{a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, wrap_angle(a.heading + b.heading)};
}

inline Pose2 inverse(const Pose2 & g) {
  const double c = std::cos(g.heading);
  const double s = std::sin(g.heading);
  return Pose2{-(c * g.x + s * g.y), -(-s * g.x + c * g.y), wrap_angle(-g.heading)};
}

enum class AgentCategory { kVehicle, kPedestrian, kCyclist };
enum class PointKind { kCenterline, kLeftBoundary, kRightBoundary };
enum class PolygonKind { kLane, kCrosswalk };

inline const char * to_string(AgentCategory c) {
  switch (c) {
    case AgentCategory::kVehicle: return "vehicle";
    case AgentCategory::kPedestrian: return "pedestrian";
    case AgentCategory::kCyclist: return "cyclist";
  }
  return "vehicle";
}

inline const char * to_string(PointKind k) {
  switch (k) {
    case PointKind::kCenterline: return "centerline";
    case PointKind::kLeftBoundary: return "left_boundary";
    case PointKind::kRightBoundary: return "right_boundary";
  }
  return "centerline";
}

inline const char * to_string(PolygonKind k) {
  switch (k) {
    case PolygonKind::kLane: return "lane";
    case PolygonKind::kCrosswalk: return "crosswalk";
  }
  return "lane";
}

inline AgentCategory agent_category_from_string(const std::string & s) {
  if (s == "vehicle") return AgentCategory::kVehicle;
  if (s == "pedestrian") return AgentCategory::kPedestrian;
  if (s == "cyclist") return AgentCategory::kCyclist;
  throw DataError("unknown agent category '" + s + "'");
}

inline PointKind point_kind_from_string(const std::string & s) {
  if (s == "centerline") return PointKind::kCenterline;
  if (s == "left_boundary") return PointKind::kLeftBoundary;
  if (s == "right_boundary") return PointKind::kRightBoundary;
  throw DataError("unknown point kind '" + s + "'");
}

inline PolygonKind polygon_kind_from_string(const std::string & s) {
  if (s == "lane") return PolygonKind::kLane;
  if (s == "crosswalk") return PolygonKind::kCrosswalk;
  throw DataError("unknown polygon kind '" + s + "'");
}

/// One observed (or ground-truth future) state of an agent. Headings follow
/// the direction of motion. Invalid states carry zeros and are ignored by all
/// consumers; only step_index stays meaningful on them.
struct AgentState {
  Pose2 pose;
  double vx = 0.0;
  double vy = 0.0;
  bool valid = true;
  std::int64_t step_index = 0;
};

/// Observed history of one agent: exactly T_h states at step_index 0..T_h-1.
struct AgentHistory {
  std::int64_t agent_id = 0;
  AgentCategory category = AgentCategory::kVehicle;
  std::vector<AgentState> states;

  const AgentState & current() const { return states.back(); }
};

/// Ground-truth future of one agent: exactly T states at step_index
/// T_h..T_h+T-1.
struct AgentFuture {
  std::int64_t agent_id = 0;
  std::vector<AgentState> states;
};

/// One sampled map point. Pose heading is the local polyline tangent.
struct MapPoint {
  std::int64_t point_id = 0;
  std::int64_t polygon_id = 0;
  PointKind kind = PointKind::kCenterline;
  Pose2 pose;
};

/// One map polygon (lane or crosswalk) referencing its sampled points.
/// entry_pose equals the pose of the polygon's first centerline point.
struct MapPolygon {
  std::int64_t polygon_id = 0;
  PolygonKind kind = PolygonKind::kLane;
  Pose2 entry_pose;
  std::vector<std::int64_t> point_ids;
};

/// A full vectorized scene. `futures` is optional ground truth used for
/// training, label generation, and evaluation.
struct Scene {
  std::string scene_id;
  double dt = 0.1;
  std::vector<AgentHistory> agents;
  std::vector<MapPolygon> polygons;
  std::vector<MapPoint> points;
  std::vector<AgentFuture> futures;

  std::int64_t history_len() const {
    return agents.empty() ? 0 : static_cast<std::int64_t>(agents.front().states.size());
  }
  std::int64_t future_len() const {
    return futures.empty() ? 0 : static_cast<std::int64_t>(futures.front().states.size());
  }
};

inline AgentState transform_state(const Pose2 & g, const AgentState & st) {
  AgentState out = st;
  out.pose = transform_pose(g, st.pose);
  const double c = std::cos(g.heading);
  const double s = std::sin(g.heading);
  out.vx = c * st.vx - s * st.vy;
  out.vy = s * st.vx + c * st.vy;
  return out;
}

/// Apply one rigid transform to every pose and velocity in the scene.
/// The identity transform reproduces the input bit-for-bit.
inline Scene apply_rigid_transform(const Scene & scene, const Pose2 & g) {
  Scene out = scene;
  for (auto & agent : out.agents) {
    for (auto & st : agent.states) st = transform_state(g, st);
  }
  for (auto & fut : out.futures) {
    for (auto & st : fut.states) st = transform_state(g, st);
  }
  for (auto & poly : out.polygons) poly.entry_pose = transform_pose(g, poly.entry_pose);
  for (auto & pt : out.points) pt.pose = transform_pose(g, pt.pose);
  return out;
}

/// One violated invariant, naming the offending entity.
struct Violation {
  std::string entity;
  std::string what;
};

namespace detail {

inline bool heading_ok(double h) { return std::isfinite(h) && h > -M_PI && h <= M_PI; }

inline void check_pose(
  const Pose2 & p, const std::string & entity, std::vector<Violation> & out) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    out.push_back({entity, "non-finite position"});
  }
  if (!heading_ok(p.heading)) {
    out.push_back({entity, "heading outside (-pi, pi]"});
  }
}

inline void check_states(
  const std::vector<AgentState> & states, std::int64_t first_step, const std::string & entity,
  std::vector<Violation> & out) {
  for (std::size_t t = 0; t < states.size(); ++t) {
    const AgentState & st = states[t];
    const std::string where = entity + " state " + std::to_string(t);
    check_pose(st.pose, where, out);
    if (!std::isfinite(st.vx) || !std::isfinite(st.vy)) {
      out.push_back({where, "non-finite velocity"});
    }
    if (st.step_index != first_step + static_cast<std::int64_t>(t)) {
      out.push_back({where, "step_index must increase by exactly 1"});
    }
  }
}

}  // namespace detail

/// Check every scene invariant; returns an empty list iff the scene is valid.
inline std::vector<Violation> validate_scene(const Scene & scene) {
  std::vector<Violation> out;
  if (!(scene.dt > 0.0) || !std::isfinite(scene.dt)) {
    out.push_back({"scene " + scene.scene_id, "dt must be finite and positive"});
  }
  if (scene.agents.empty()) out.push_back({"scene " + scene.scene_id, "no agents"});
  if (scene.polygons.empty()) out.push_back({"scene " + scene.scene_id, "no polygons"});
  if (scene.points.empty()) out.push_back({"scene " + scene.scene_id, "no map points"});
  if (static_cast<std::int64_t>(scene.agents.size()) > kMaxAgents) {
    out.push_back({"scene " + scene.scene_id, "agent count above cap"});
  }
  if (static_cast<std::int64_t>(scene.polygons.size()) > kMaxPolygons) {
    out.push_back({"scene " + scene.scene_id, "polygon count above cap"});
  }
  if (static_cast<std::int64_t>(scene.points.size()) > kMaxPoints) {
    out.push_back({"scene " + scene.scene_id, "map point count above cap"});
  }

  const std::int64_t t_h = scene.history_len();
  std::vector<std::int64_t> agent_ids;
  for (const auto & agent : scene.agents) {
    const std::string entity = "agent " + std::to_string(agent.agent_id);
    agent_ids.push_back(agent.agent_id);
    if (agent.states.empty()) {
      out.push_back({entity, "empty history"});
      continue;
    }
    if (static_cast<std::int64_t>(agent.states.size()) != t_h) {
      out.push_back({entity, "history length differs across agents"});
    }
    if (agent.states.front().step_index != 0) {
      out.push_back({entity, "history must start at step_index 0"});
    }
    detail::check_states(agent.states, agent.states.front().step_index, entity, out);
  }

  std::vector<std::int64_t> polygon_ids;
  for (const auto & poly : scene.polygons) {
    const std::string entity = "polygon " + std::to_string(poly.polygon_id);
    polygon_ids.push_back(poly.polygon_id);
    detail::check_pose(poly.entry_pose, entity, out);
    if (poly.point_ids.empty()) out.push_back({entity, "no points"});
  }

  auto find_polygon = [&](std::int64_t id) -> const MapPolygon * {
    for (const auto & poly : scene.polygons) {
      if (poly.polygon_id == id) return &poly;
    }
    return nullptr;
  };

  for (const auto & pt : scene.points) {
    const std::string entity = "point " + std::to_string(pt.point_id);
    detail::check_pose(pt.pose, entity, out);
    if (find_polygon(pt.polygon_id) == nullptr) {
      out.push_back({entity, "references unknown polygon"});
    }
  }

  auto find_point = [&](std::int64_t id) -> const MapPoint * {
    for (const auto & pt : scene.points) {
      if (pt.point_id == id) return &pt;
    }
    return nullptr;
  };

  for (const auto & poly : scene.polygons) {
    const std::string entity = "polygon " + std::to_string(poly.polygon_id);
    const MapPoint * first_centerline = nullptr;
    for (auto pid : poly.point_ids) {
      const MapPoint * pt = find_point(pid);
      if (pt == nullptr) {
        out.push_back({entity, "point_ids references unknown point " + std::to_string(pid)});
        continue;
      }
      if (pt->polygon_id != poly.polygon_id) {
        out.push_back({entity, "point " + std::to_string(pid) + " belongs to another polygon"});
      }
      if (first_centerline == nullptr && pt->kind == PointKind::kCenterline) {
        first_centerline = pt;
      }
    }
    if (first_centerline == nullptr) {
      out.push_back({entity, "no centerline points"});
    } else if (
      first_centerline->pose.x != poly.entry_pose.x || first_centerline->pose.y != poly.entry_pose.y ||
      first_centerline->pose.heading != poly.entry_pose.heading) {
      out.push_back({entity, "entry_pose differs from first centerline point"});
    }
  }

  const std::int64_t t_f = scene.future_len();
  for (const auto & fut : scene.futures) {
    const std::string entity = "future for agent " + std::to_string(fut.agent_id);
    bool known = false;
    for (auto id : agent_ids) known = known || id == fut.agent_id;
    if (!known) out.push_back({entity, "references unknown agent"});
    if (static_cast<std::int64_t>(fut.states.size()) != t_f || fut.states.empty()) {
      out.push_back({entity, "future length differs across agents"});
    }
    if (!fut.states.empty()) {
      if (fut.states.front().step_index != t_h) {
        out.push_back({entity, "future must start at step_index T_h"});
      }
      detail::check_states(fut.states, fut.states.front().step_index, entity, out);
    }
  }
  return out;
}

/// Throwing wrapper around validate_scene.
inline void require_valid(const Scene & scene) {
  auto violations = validate_scene(scene);
  if (!violations.empty()) {
    std::string msg = "scene '" + scene.scene_id + "' invalid: ";
    msg += violations.front().entity + ": " + violations.front().what;
    if (violations.size() > 1) {
      msg += " (+" + std::to_string(violations.size() - 1) + " more)";
    }
    throw DataError(msg);
  }
}

}  // namespace futurenet

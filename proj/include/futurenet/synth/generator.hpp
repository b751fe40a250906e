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
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "futurenet/core/error.hpp"
#include "futurenet/core/rng.hpp"
#include "futurenet/lof/labels.hpp"
#include "futurenet/scene/json_io.hpp"
#include "futurenet/scene/scene.hpp"

namespace futurenet {

enum class Layout { kStraight, kCurve, kTIntersection, kCrossroad };

inline const char * to_string(Layout l) {
  switch (l) {
    case Layout::kStraight: return "straight";
    case Layout::kCurve: return "curve";
    case Layout::kTIntersection: return "t_intersection";
    case Layout::kCrossroad: return "crossroad";
  }
  return "straight";
}

inline Layout layout_from_string(const std::string & s) {
  if (s == "straight") return Layout::kStraight;
  if (s == "curve") return Layout::kCurve;
  if (s == "t_intersection") return Layout::kTIntersection;
  if (s == "crossroad") return Layout::kCrossroad;
  throw ConfigError("unknown layout '" + s + "'");
}

/// Ground-truth label proximity threshold shared by the generator and the
/// evaluation pipeline.
inline constexpr double kLofLabelThreshold = 2.0;

struct GenConfig {
  std::uint64_t seed = 0;
  Layout layout = Layout::kCrossroad;
  std::int64_t n_agents_min = 2;
  std::int64_t n_agents_max = 6;
  std::int64_t t_history = 10;
  std::int64_t t_future = 30;
  std::int64_t n_keyframes = 3;
  double dt = 0.1;
  double point_spacing = 2.0;
  double lane_width = 3.5;
  double speed_min = 3.0;
  double speed_max = 12.0;
  double lane_change_prob = 0.25;
  double stop_and_go_prob = 0.15;

  void validate() const {
    if (n_agents_min < 1 || n_agents_max < n_agents_min || n_agents_max > kMaxAgents) {
      throw ConfigError("agent count range must satisfy 1 <= min <= max <= cap");
    }
    if (t_history < 2) throw ConfigError("t_history must be >= 2");
    if (t_future < 1) throw ConfigError("t_future must be >= 1");
    if (n_keyframes < 1 || t_future % n_keyframes != 0) {
      throw ConfigError("t_future must be divisible by n_keyframes");
    }
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(point_spacing > 0.0)) throw ConfigError("point_spacing must be positive");
    if (!(lane_width > 1.0)) throw ConfigError("lane_width must exceed 1 meter");
    if (!(speed_min >= 0.0) || !(speed_max >= speed_min) || !(speed_max <= 20.0)) {
      throw ConfigError("speed range must satisfy 0 <= min <= max <= 20");
    }
    if (!(speed_max > 0.0)) throw ConfigError("speed_max must be positive");
    if (lane_change_prob < 0.0 || lane_change_prob > 1.0) {
      throw ConfigError("lane_change_prob must be in [0, 1]");
    }
    if (stop_and_go_prob < 0.0 || stop_and_go_prob > 1.0) {
      throw ConfigError("stop_and_go_prob must be in [0, 1]");
    }
  }
};

inline void to_json(nlohmann::json & j, const GenConfig & c) {
  j = nlohmann::json{
    {"seed", c.seed},
    {"layout", to_string(c.layout)},
    {"n_agents_min", c.n_agents_min},
    {"n_agents_max", c.n_agents_max},
    {"t_history", c.t_history},
    {"t_future", c.t_future},
    {"n_keyframes", c.n_keyframes},
    {"dt", c.dt},
    {"point_spacing", c.point_spacing},
    {"lane_width", c.lane_width},
    {"speed_min", c.speed_min},
    {"speed_max", c.speed_max},
    {"lane_change_prob", c.lane_change_prob},
    {"stop_and_go_prob", c.stop_and_go_prob}};
}

inline void from_json(const nlohmann::json & j, GenConfig & c) {
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (j.contains("layout")) c.layout = layout_from_string(j.at("layout").get<std::string>());
  if (j.contains("n_agents_min")) j.at("n_agents_min").get_to(c.n_agents_min);
  if (j.contains("n_agents_max")) j.at("n_agents_max").get_to(c.n_agents_max);
  if (j.contains("t_history")) j.at("t_history").get_to(c.t_history);
  if (j.contains("t_future")) j.at("t_future").get_to(c.t_future);
  if (j.contains("n_keyframes")) j.at("n_keyframes").get_to(c.n_keyframes);
  if (j.contains("dt")) j.at("dt").get_to(c.dt);
  if (j.contains("point_spacing")) j.at("point_spacing").get_to(c.point_spacing);
  if (j.contains("lane_width")) j.at("lane_width").get_to(c.lane_width);
  if (j.contains("speed_min")) j.at("speed_min").get_to(c.speed_min);
  if (j.contains("speed_max")) j.at("speed_max").get_to(c.speed_max);
  if (j.contains("lane_change_prob")) j.at("lane_change_prob").get_to(c.lane_change_prob);
  if (j.contains("stop_and_go_prob")) j.at("stop_and_go_prob").get_to(c.stop_and_go_prob);
}

// ----------------------------------------------------------------------------
// Lane graph
// ----------------------------------------------------------------------------

/// Constant-curvature primitive. curvature > 0 bends left; 0 is straight.
struct Segment {
  Pose2 start;
  double length = 0.0;
  double curvature = 0.0;

  Pose2 at(double s) const {
    if (curvature == 0.0) {
      return Pose2{
        start.x + s * std::cos(start.heading), start.y + s * std::sin(start.heading),
        start.heading};
    }
    const double h1 = start.heading + curvature * s;
    return Pose2{
      start.x + (std::sin(h1) - std::sin(start.heading)) / curvature,
      start.y - (std::cos(h1) - std::cos(start.heading)) / curvature, wrap_angle(h1)};
  }
};

/// Link to the lane reached when this one ends (entering it at arclength s).
struct LaneLink {
  int lane = -1;
  double s = 0.0;
};

/// Optional mid-lane departure onto a connector (T-intersection turns).
struct LaneBranch {
  double s = 0.0;
  int connector = -1;
};

struct Lane {
  std::vector<Segment> segments;
  double length = 0.0;
  std::vector<LaneLink> successors;
  std::vector<LaneBranch> branches;
  int left = -1;   // adjacent same-direction lane reached by a left lane change
  int right = -1;
  bool is_connector = false;
  bool is_turn = false;

  Pose2 at(double s) const {
    s = std::clamp(s, 0.0, length);
    for (const auto & seg : segments) {
      if (s <= seg.length + 1e-12) return seg.at(std::min(s, seg.length));
      s -= seg.length;
    }
    return segments.back().at(segments.back().length);
  }
};

struct LaneGraph {
  std::vector<Lane> lanes;
  double lane_width = 3.5;
};

namespace synth_detail {

inline Lane straight_lane(const Pose2 & start, double length) {
  Lane lane;
  lane.segments.push_back(Segment{start, length, 0.0});
  lane.length = length;
  return lane;
}

inline Lane arc_lane(const Pose2 & start, double radius, double sweep) {
  // sweep > 0 turns left; arc length is |sweep| * radius.
  Lane lane;
  const double curvature = (sweep >= 0.0 ? 1.0 : -1.0) / radius;
  lane.segments.push_back(Segment{start, std::abs(sweep) * radius, curvature});
  lane.length = lane.segments.back().length;
  lane.is_turn = std::abs(sweep) > M_PI / 6.0;
  return lane;
}

inline Pose2 lane_end(const Lane & lane) { return lane.at(lane.length); }

}  // namespace synth_detail

/// Build the lane graph for a layout. Deterministic for a given config seed;
/// the seed only enters through sampled curve geometry.
inline LaneGraph build_lane_graph(const GenConfig & config) {
  using namespace synth_detail;
  config.validate();
  LaneGraph graph;
  graph.lane_width = config.lane_width;
  const double w = config.lane_width;

  switch (config.layout) {
    case Layout::kStraight: {
      // Three parallel same-direction lanes, exactly 100 m long.
      for (int i = 0; i < 3; ++i) {
        Lane lane = straight_lane(Pose2{-50.0, (i - 1) * w, 0.0}, 100.0);
        lane.left = i < 2 ? i + 1 : -1;
        lane.right = i > 0 ? i - 1 : -1;
        graph.lanes.push_back(std::move(lane));
      }
      break;
    }
    case Layout::kCurve: {
      RandomStream rng(RandomStream::mix(config.seed, 0x637572766569ULL));
      const double radius = rng.uniform(35.0, 55.0);
      const bool left_turn = rng.bernoulli(0.5);
      const double sweep = std::min(2.4, 95.0 / radius);
      for (int i = 0; i < 2; ++i) {
        const double r_i = radius + i * w;
        Lane lane = left_turn
                      ? arc_lane(Pose2{0.0, i * -w, 0.0}, r_i, sweep * radius / r_i)
                      : arc_lane(Pose2{0.0, i * w, 0.0}, r_i, -sweep * radius / r_i);
        // Both lanes sweep the same angle about a shared center.
        lane.segments.back().length = r_i * sweep;
        lane.length = lane.segments.back().length;
        lane.is_turn = false;  // a curved road is not an intersection turn
        if (left_turn) {
          lane.left = i == 1 ? 0 : -1;   // inner lane lies to the left
          lane.right = i == 0 ? 1 : -1;
        } else {
          lane.left = i == 0 ? 1 : -1;   // outer lane lies to the left
          lane.right = i == 1 ? 0 : -1;
        }
        graph.lanes.push_back(std::move(lane));
      }
      break;
    }
    case Layout::kCrossroad: {
      // Four arms around the origin: per arm an approach lane, an exit lane,
      // and through/right/left connectors (right-hand traffic).
      const double arm = 40.0;
      const double box = 1.5 * w;
      std::vector<int> approach_idx(4), exit_idx(4);
      for (int d = 0; d < 4; ++d) {
        const double th = d * M_PI / 2.0;
        const double ux = std::cos(th), uy = std::sin(th);
        // Incoming: travels toward the center; offset w/2 to its right.
        const Pose2 in_start{
          arm * ux - uy * w / 2.0, arm * uy + ux * w / 2.0, wrap_angle(th + M_PI)};
        Lane in_lane = straight_lane(in_start, arm - box);
        approach_idx[d] = static_cast<int>(graph.lanes.size());
        graph.lanes.push_back(std::move(in_lane));
        // Outgoing: travels away from the center.
        const Pose2 out_start{box * ux + uy * w / 2.0, box * uy - ux * w / 2.0, wrap_angle(th)};
        Lane out_lane = straight_lane(out_start, arm - box);
        exit_idx[d] = static_cast<int>(graph.lanes.size());
        graph.lanes.push_back(std::move(out_lane));
      }
      for (int d = 0; d < 4; ++d) {
        const Pose2 from = lane_end(graph.lanes[approach_idx[d]]);
        Lane through = straight_lane(from, 2.0 * box);
        through.is_connector = true;
        through.successors.push_back(LaneLink{exit_idx[(d + 2) % 4], 0.0});
        const int through_i = static_cast<int>(graph.lanes.size());
        graph.lanes.push_back(std::move(through));

        Lane right = arc_lane(from, w, -M_PI / 2.0);
        right.is_connector = true;
        right.successors.push_back(LaneLink{exit_idx[(d + 1) % 4], 0.0});
        const int right_i = static_cast<int>(graph.lanes.size());
        graph.lanes.push_back(std::move(right));

        Lane left = arc_lane(from, 2.0 * w, M_PI / 2.0);
        left.is_connector = true;
        left.successors.push_back(LaneLink{exit_idx[(d + 3) % 4], 0.0});
        const int left_i = static_cast<int>(graph.lanes.size());
        graph.lanes.push_back(std::move(left));

        auto & approach = graph.lanes[approach_idx[d]];
        approach.successors.push_back(LaneLink{through_i, 0.0});
        approach.successors.push_back(LaneLink{right_i, 0.0});
        approach.successors.push_back(LaneLink{left_i, 0.0});
      }
      break;
    }
    case Layout::kTIntersection: {
      // East-west main road plus a south branch.
      const double arm = 40.0;
      const double box = 1.5 * w;
      Lane east = straight_lane(Pose2{-arm, -w / 2.0, 0.0}, 2.0 * arm);
      Lane west = straight_lane(Pose2{arm, w / 2.0, M_PI}, 2.0 * arm);
      const int east_i = 0, west_i = 1;
      graph.lanes.push_back(std::move(east));
      graph.lanes.push_back(std::move(west));

      Lane approach = straight_lane(Pose2{w / 2.0, -arm, M_PI / 2.0}, arm - box);
      const int approach_i = 2;
      graph.lanes.push_back(std::move(approach));
      Lane exit = straight_lane(Pose2{-w / 2.0, -box, -M_PI / 2.0}, arm - box);
      const int exit_i = 3;
      graph.lanes.push_back(std::move(exit));

      const Pose2 from = lane_end(graph.lanes[approach_i]);
      Lane branch_right = arc_lane(from, w, -M_PI / 2.0);  // north-bound -> east-bound
      branch_right.is_connector = true;
      branch_right.successors.push_back(LaneLink{east_i, arm + box});
      const int br_i = static_cast<int>(graph.lanes.size());
      graph.lanes.push_back(std::move(branch_right));

      Lane branch_left = arc_lane(from, 2.0 * w, M_PI / 2.0);  // north-bound -> west-bound
      branch_left.is_connector = true;
      branch_left.successors.push_back(LaneLink{west_i, arm + box});
      const int bl_i = static_cast<int>(graph.lanes.size());
      graph.lanes.push_back(std::move(branch_left));

      graph.lanes[approach_i].successors.push_back(LaneLink{br_i, 0.0});
      graph.lanes[approach_i].successors.push_back(LaneLink{bl_i, 0.0});

      // Turns off the main road into the branch exit.
      Lane east_right = arc_lane(Pose2{-box, -w / 2.0, 0.0}, w, -M_PI / 2.0);
      east_right.is_connector = true;
      east_right.successors.push_back(LaneLink{exit_i, 0.0});
      const int er_i = static_cast<int>(graph.lanes.size());
      graph.lanes.push_back(std::move(east_right));
      graph.lanes[east_i].branches.push_back(LaneBranch{arm - box, er_i});

      Lane west_left = arc_lane(Pose2{box, w / 2.0, M_PI}, 2.0 * w, M_PI / 2.0);
      west_left.is_connector = true;
      west_left.successors.push_back(LaneLink{exit_i, 0.0});
      const int wl_i = static_cast<int>(graph.lanes.size());
      graph.lanes.push_back(std::move(west_left));
      graph.lanes[west_i].branches.push_back(LaneBranch{arm - box, wl_i});
      break;
    }
  }
  return graph;
}

namespace synth_detail {

/// Uniform arclength samples including both endpoints, at most `spacing` apart.
inline std::vector<double> sample_arclengths(double length, double spacing) {
  const auto n = static_cast<std::int64_t>(std::ceil(length / spacing - 1e-9)) + 1;
  std::vector<double> s(static_cast<std::size_t>(n));
  const double step = length / static_cast<double>(n - 1);
  for (std::int64_t i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = step * static_cast<double>(i);
  s.back() = length;
  return s;
}

inline Pose2 offset_pose(const Pose2 & p, double left_offset) {
  return Pose2{
    p.x - left_offset * std::sin(p.heading), p.y + left_offset * std::cos(p.heading), p.heading};
}

}  // namespace synth_detail

/// Materialize polygons and sampled points (centerline plus both boundaries)
/// from a lane graph. Throws when the layout overflows the desk-scale caps.
inline void lane_graph_to_scene(const LaneGraph & graph, const GenConfig & config, Scene & scene) {
  using namespace synth_detail;
  std::int64_t next_point = 0;
  for (std::size_t li = 0; li < graph.lanes.size(); ++li) {
    const Lane & lane = graph.lanes[li];
    MapPolygon poly;
    poly.polygon_id = static_cast<std::int64_t>(li);
    poly.kind = PolygonKind::kLane;
    const auto arcs = sample_arclengths(lane.length, config.point_spacing);
    const double offsets[3] = {0.0, graph.lane_width / 2.0, -graph.lane_width / 2.0};
    const PointKind kinds[3] = {
      PointKind::kCenterline, PointKind::kLeftBoundary, PointKind::kRightBoundary};
    for (int k = 0; k < 3; ++k) {
      for (double s : arcs) {
        MapPoint pt;
        pt.point_id = next_point++;
        pt.polygon_id = poly.polygon_id;
        pt.kind = kinds[k];
        pt.pose = offset_pose(lane.at(s), offsets[k]);
        poly.point_ids.push_back(pt.point_id);
        scene.points.push_back(pt);
      }
    }
    poly.entry_pose = lane.at(0.0);
    scene.polygons.push_back(std::move(poly));
  }
  if (static_cast<std::int64_t>(scene.points.size()) > kMaxPoints) {
    throw ConfigError(
      "layout '" + std::string(to_string(config.layout)) + "' with spacing " +
      std::to_string(config.point_spacing) + " yields " + std::to_string(scene.points.size()) +
      " map points, above the cap of " + std::to_string(kMaxPoints));
  }
  if (static_cast<std::int64_t>(scene.polygons.size()) > kMaxPolygons) {
    throw ConfigError("layout yields more polygons than the cap");
  }
}

// ----------------------------------------------------------------------------
// Agent simulation
// ----------------------------------------------------------------------------

/// Per-scene maneuver bookkeeping used by distribution tests and tooling.
struct SimStats {
  int agents = 0;
  int lane_changes = 0;
  int turns = 0;
};

namespace synth_detail {

struct RoutePiece {
  int lane = -1;
  double s_begin = 0.0;
  double s_end = 0.0;
};

struct Route {
  std::vector<RoutePiece> pieces;
  double length = 0.0;
  bool has_turn_within(double dist_begin, double dist_end, const LaneGraph & graph) const {
    double base = 0.0;
    for (const auto & piece : pieces) {
      const double piece_len = piece.s_end - piece.s_begin;
      if (graph.lanes[piece.lane].is_turn && base < dist_end && base + piece_len > dist_begin) {
        return true;
      }
      base += piece_len;
    }
    return false;
  }
  Pose2 at(const LaneGraph & graph, double dist) const {
    dist = std::clamp(dist, 0.0, length);
    for (const auto & piece : pieces) {
      const double piece_len = piece.s_end - piece.s_begin;
      if (dist <= piece_len + 1e-12) {
        return graph.lanes[piece.lane].at(piece.s_begin + std::min(dist, piece_len));
      }
      dist -= piece_len;
    }
    const auto & last = pieces.back();
    return graph.lanes[last.lane].at(last.s_end);
  }
};

/// Build a driving route starting on `lane0` at arclength `s0`, following
/// branches and successors chosen from `rng`, until `needed` meters are
/// available or the graph dead-ends.
inline Route build_route(
  const LaneGraph & graph, int lane0, double s0, double needed, RandomStream & rng) {
  Route route;
  int lane = lane0;
  double s = s0;
  while (route.length < needed) {
    const Lane & l = graph.lanes[lane];
    // A mid-lane branch may leave before the lane end.
    const LaneBranch * taken = nullptr;
    for (const auto & b : l.branches) {
      if (b.s > s + 1e-9 && taken == nullptr && rng.bernoulli(0.5)) taken = &b;
    }
    const double s_exit = taken != nullptr ? taken->s : l.length;
    route.pieces.push_back(RoutePiece{lane, s, s_exit});
    route.length += s_exit - s;
    if (taken != nullptr) {
      lane = taken->connector;
      s = 0.0;
      continue;
    }
    if (l.successors.empty()) break;
    const auto & link =
      l.successors[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(l.successors.size()) - 1))];
    lane = link.lane;
    s = link.s;
  }
  return route;
}

struct SpeedProfile {
  std::vector<double> v;  // target speed per step transition
};

inline SpeedProfile make_profile(
  std::int64_t n_steps, double v0, bool stop_and_go, RandomStream & rng, double dt) {
  SpeedProfile p;
  p.v.assign(static_cast<std::size_t>(n_steps), v0);
  if (stop_and_go && v0 > 0.5) {
    const auto decel_steps = std::max<std::int64_t>(2, static_cast<std::int64_t>(std::ceil(v0 / 3.0 / dt)));
    const std::int64_t hold = rng.uniform_int(3, 8);
    const std::int64_t t1 = rng.uniform_int(2, std::max<std::int64_t>(2, n_steps / 3));
    for (std::int64_t t = 0; t < n_steps; ++t) {
      double v = v0;
      if (t >= t1 && t < t1 + decel_steps) {
        v = v0 * (1.0 - static_cast<double>(t - t1 + 1) / static_cast<double>(decel_steps));
      } else if (t >= t1 + decel_steps && t < t1 + decel_steps + hold) {
        v = 0.0;
      } else if (t >= t1 + decel_steps + hold) {
        const auto k = static_cast<double>(t - t1 - decel_steps - hold + 1);
        v = std::min(v0, v0 * k / static_cast<double>(decel_steps));
      }
      p.v[static_cast<std::size_t>(t)] = std::max(0.0, v);
    }
  }
  return p;
}

inline double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

}  // namespace synth_detail

/// Simulate agents onto an existing lane graph scene. Returns history+future
/// states; all states valid. Velocities are backward finite differences of
/// positions, headings follow motion.
inline void simulate_agents(
  const LaneGraph & graph, const GenConfig & config, std::uint64_t scene_seed, Scene & scene,
  SimStats * stats) {
  using namespace synth_detail;
  RandomStream rng(RandomStream::mix(scene_seed, 0x6167656e7473ULL));
  const std::int64_t n_steps = config.t_history + config.t_future;
  const double horizon_s = static_cast<double>(n_steps) * config.dt;
  const auto n_agents = rng.uniform_int(config.n_agents_min, config.n_agents_max);

  // Lanes an agent may spawn on, with sampling weights.
  std::vector<int> spawn_lanes;
  for (std::size_t li = 0; li < graph.lanes.size(); ++li) {
    if (graph.lanes[li].is_connector) continue;
    const int weight = graph.lanes[li].successors.empty() && !graph.lanes[li].branches.empty() ? 3 : 2;
    for (int k = 0; k < weight; ++k) spawn_lanes.push_back(static_cast<int>(li));
  }
  if (spawn_lanes.empty()) throw ConfigError("layout offers no spawnable lanes");

  struct Placed {
    int lane;
    double s0;
  };
  std::vector<Placed> placed;

  for (std::int64_t a = 0; a < n_agents; ++a) {
    RandomStream arng = rng.fork(0x100 + static_cast<std::uint64_t>(a));

    // Category and its speed envelope.
    AgentCategory category = AgentCategory::kVehicle;
    const double cat_draw = arng.uniform();
    if (cat_draw > 0.95) {
      category = AgentCategory::kPedestrian;
    } else if (cat_draw > 0.85) {
      category = AgentCategory::kCyclist;
    }
    double v_cap = config.speed_max;
    if (category == AgentCategory::kCyclist) v_cap = std::min(v_cap, 7.0);
    if (category == AgentCategory::kPedestrian) v_cap = std::min(v_cap, 2.0);

    // Spawn with a minimum along-lane gap to already-placed agents.
    int lane = -1;
    double s0 = 0.0;
    for (int attempt = 0; attempt < 24 && lane < 0; ++attempt) {
      const int cand =
        spawn_lanes[static_cast<std::size_t>(arng.uniform_int(0, static_cast<std::int64_t>(spawn_lanes.size()) - 1))];
      const double len = graph.lanes[cand].length;
      if (len < 8.0) continue;
      const double cand_s = arng.uniform(1.0, std::max(1.5, len * 0.7));
      bool clear = true;
      for (const auto & p : placed) {
        if (p.lane == cand && std::abs(p.s0 - cand_s) < 6.0) clear = false;
      }
      if (clear) {
        lane = cand;
        s0 = cand_s;
      }
    }
    if (lane < 0) continue;  // crowded scene; place fewer agents
    placed.push_back(Placed{lane, s0});

    // Maneuver selection: a lane change and a stop phase are mutually
    // exclusive so stopped agents hold position exactly.
    const bool can_change = graph.lanes[lane].left >= 0 || graph.lanes[lane].right >= 0;
    const bool lane_change =
      can_change && v_cap >= 2.2 && arng.bernoulli(config.lane_change_prob);
    const bool stop_and_go = !lane_change && arng.bernoulli(config.stop_and_go_prob);

    // Lateral plan: constant per-agent offset plus an optional change ramp.
    const double base_offset = std::clamp(arng.normal(0.0, 0.1), -0.3, 0.3);
    double change_dir = 0.0;
    std::int64_t change_start = 0;
    std::int64_t change_dur = 0;
    if (lane_change) {
      const Lane & l = graph.lanes[lane];
      if (l.left >= 0 && l.right >= 0) {
        change_dir = arng.bernoulli(0.5) ? 1.0 : -1.0;
      } else {
        change_dir = l.left >= 0 ? 1.0 : -1.0;
      }
      change_dur = std::max<std::int64_t>(
        static_cast<std::int64_t>(std::llround(2.5 / config.dt)),
        static_cast<std::int64_t>(std::llround(1.5 * config.lane_width / (0.9 * v_cap) / config.dt)));
      change_dur = std::min(change_dur, n_steps - 3);
      change_start = arng.uniform_int(1, std::max<std::int64_t>(1, n_steps - change_dur - 1));
    }

    // Longitudinal plan.
    double v0 = arng.uniform(std::min(config.speed_min, v_cap), v_cap);
    if (lane_change) {
      const double lat_peak = 1.5 * config.lane_width / (static_cast<double>(change_dur) * config.dt);
      v0 = std::min(v0, std::sqrt(std::max(0.25, v_cap * v_cap - lat_peak * lat_peak)) - 0.1);
      v0 = std::max(v0, 0.0);
    }
    Route route = build_route(graph, lane, s0, v0 * horizon_s + 4.0, arng);
    if (route.length < v0 * horizon_s + 2.0) {
      v0 = std::max(0.0, (route.length - 2.0) / horizon_s);
    }
    SpeedProfile profile = make_profile(n_steps, v0, stop_and_go, arng, config.dt);

    // Roll the trajectory out step by step with a hard per-step speed cap.
    std::vector<double> xs(static_cast<std::size_t>(n_steps)), ys(static_cast<std::size_t>(n_steps));
    auto offset_at = [&](std::int64_t t) {
      double o = base_offset;
      if (lane_change && t >= change_start) {
        o += change_dir * graph.lane_width *
             smoothstep(static_cast<double>(t - change_start) / static_cast<double>(change_dur));
      }
      return o;
    };
    double dist = 0.0;
    {
      const Pose2 p0 = offset_pose(route.at(graph, 0.0), offset_at(0));
      xs[0] = p0.x;
      ys[0] = p0.y;
    }
    const double cap = config.speed_max * config.dt;
    for (std::int64_t t = 1; t < n_steps; ++t) {
      const double want = profile.v[static_cast<std::size_t>(t)] * config.dt;
      double lo = 0.0, hi = want;
      auto step_to = [&](double adv) {
        const Pose2 p = offset_pose(route.at(graph, dist + adv), offset_at(t));
        const double dx = p.x - xs[t - 1], dy = p.y - ys[t - 1];
        return std::sqrt(dx * dx + dy * dy);
      };
      double adv = want;
      if (step_to(want) > cap * (1.0 + 1e-12)) {
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (step_to(mid) > cap) {
            hi = mid;
          } else {
            lo = mid;
          }
        }
        adv = lo;
      }
      dist += adv;
      const Pose2 p = offset_pose(route.at(graph, dist), offset_at(t));
      xs[static_cast<std::size_t>(t)] = p.x;
      ys[static_cast<std::size_t>(t)] = p.y;
    }

    // States: velocities are backward differences; headings follow motion.
    std::vector<AgentState> states(static_cast<std::size_t>(n_steps));
    double prev_heading = route.at(graph, 0.0).heading;
    for (std::int64_t t = 0; t < n_steps; ++t) {
      auto & st = states[static_cast<std::size_t>(t)];
      st.step_index = t;
      st.pose.x = xs[static_cast<std::size_t>(t)];
      st.pose.y = ys[static_cast<std::size_t>(t)];
      if (t >= 1) {
        st.vx = (xs[static_cast<std::size_t>(t)] - xs[static_cast<std::size_t>(t - 1)]) / config.dt;
        st.vy = (ys[static_cast<std::size_t>(t)] - ys[static_cast<std::size_t>(t - 1)]) / config.dt;
      }
      const double speed = std::sqrt(st.vx * st.vx + st.vy * st.vy);
      st.pose.heading = speed * config.dt > 1e-9 ? std::atan2(st.vy, st.vx) : prev_heading;
      st.pose.heading = wrap_angle(st.pose.heading);
      prev_heading = st.pose.heading;
      st.valid = true;
    }
    states[0].vx = states.size() > 1 ? states[1].vx : 0.0;
    states[0].vy = states.size() > 1 ? states[1].vy : 0.0;

    AgentHistory hist;
    hist.agent_id = static_cast<std::int64_t>(scene.agents.size());
    hist.category = category;
    hist.states.assign(states.begin(), states.begin() + config.t_history);
    AgentFuture fut;
    fut.agent_id = hist.agent_id;
    fut.states.assign(states.begin() + config.t_history, states.end());

    scene.agents.push_back(std::move(hist));
    scene.futures.push_back(std::move(fut));
    if (stats != nullptr) {
      stats->agents += 1;
      if (lane_change) stats->lane_changes += 1;
      if (route.has_turn_within(0.0, dist, graph)) stats->turns += 1;
    }
  }

  // Guarantee at least one agent even in crowded draws.
  if (scene.agents.empty()) {
    const int lane = spawn_lanes.front();
    const double s0 = std::min(2.0, graph.lanes[lane].length / 2.0);
    const Pose2 p = graph.lanes[lane].at(s0);
    AgentHistory hist;
    hist.agent_id = 0;
    hist.category = AgentCategory::kVehicle;
    AgentFuture fut;
    fut.agent_id = 0;
    for (std::int64_t t = 0; t < n_steps; ++t) {
      AgentState st;
      st.step_index = t;
      st.pose = p;
      st.vx = 0.0;
      st.vy = 0.0;
      st.valid = true;
      if (t < config.t_history) {
        hist.states.push_back(st);
      } else {
        fut.states.push_back(st);
      }
    }
    scene.agents.push_back(std::move(hist));
    scene.futures.push_back(std::move(fut));
    if (stats != nullptr) stats->agents += 1;
  }
}

/// Generate one full scene (map + agents + futures) for a derived seed.
inline Scene generate_scene(
  const GenConfig & config, std::uint64_t scene_seed, const std::string & scene_id,
  SimStats * stats = nullptr) {
  config.validate();
  GenConfig seeded = config;
  seeded.seed = scene_seed;
  Scene scene;
  scene.scene_id = scene_id;
  scene.dt = config.dt;
  const LaneGraph graph = build_lane_graph(seeded);
  lane_graph_to_scene(graph, seeded, scene);
  simulate_agents(graph, seeded, scene_seed, scene, stats);
  return scene;
}

/// Generate `n` scenario files plus a manifest.json into `out_dir`.
/// Deterministic: rerunning with identical arguments rewrites identical bytes.
inline nlohmann::json generate_dataset(
  const GenConfig & config, std::int64_t n, const std::string & out_dir, bool with_labels = true) {
  config.validate();
  if (n < 0) throw ConfigError("scene count must be >= 0");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());

  nlohmann::json scenes = nlohmann::json::array();
  for (std::int64_t i = 0; i < n; ++i) {
    const std::uint64_t scene_seed = RandomStream::mix(config.seed, static_cast<std::uint64_t>(i));
    char idx[24];
    std::snprintf(idx, sizeof(idx), "%06lld", static_cast<long long>(i));
    const std::string scene_id =
      std::string(to_string(config.layout)) + "_" + std::to_string(config.seed) + "_" + idx;
    SimStats stats;
    Scene scene = generate_scene(config, scene_seed, scene_id, &stats);
    require_valid(scene);
    std::optional<LofLabels> labels;
    if (with_labels) {
      labels = generate_lof_labels(
        scene, kLofLabelThreshold, keyframe_steps_for(config.t_future, config.n_keyframes));
    }
    const std::string file = "scene_" + std::string(idx) + ".json";
    save_scene((fs::path(out_dir) / file).string(), scene, labels);
    scenes.push_back(nlohmann::json{
      {"scene_id", scene_id},
      {"file", file},
      {"seed", scene_seed},
      {"layout", to_string(config.layout)},
      {"n_agents", stats.agents}});
  }

  nlohmann::json manifest{
    {"version", 1},
    {"n_scenes", n},
    {"config", config},
    {"scenes", std::move(scenes)}};
  write_text_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
  return manifest;
}

/// Scene file paths listed by a dataset manifest, in manifest order.
inline std::vector<std::string> dataset_scene_files(const std::string & dataset_dir) {
  namespace fs = std::filesystem;
  const auto manifest_path = (fs::path(dataset_dir) / "manifest.json").string();
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text_file(manifest_path));
  } catch (const nlohmann::json::exception & e) {
    throw DataError("cannot parse manifest '" + manifest_path + "': " + e.what());
  }
  std::vector<std::string> files;
  for (const auto & entry : manifest.at("scenes")) {
    files.push_back((fs::path(dataset_dir) / entry.at("file").get<std::string>()).string());
  }
  return files;
}

}  // namespace futurenet

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

#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "futurenet/core/error.hpp"
#include "futurenet/scene/scene.hpp"

namespace futurenet {

/// Keyframe occupancy labels attached to a scenario file:
/// values[kf][i] is 1 when some agent is within `threshold` meters of map
/// point i at keyframe step keyframe_steps[kf] (1-indexed future steps).
struct LofLabels {
  double threshold = 2.0;
  std::vector<std::int64_t> keyframe_steps;
  std::vector<std::vector<int>> values;
};

namespace json_detail {

using nlohmann::json;

inline json pose_to_json(const Pose2 & p) {
  return json{{"x", p.x}, {"y", p.y}, {"heading", p.heading}};
}

inline Pose2 pose_from_json(const json & j) {
  return Pose2{j.at("x").get<double>(), j.at("y").get<double>(), j.at("heading").get<double>()};
}

inline json state_to_json(const AgentState & st) {
  return json{
    {"step_index", st.step_index},
    {"pose", pose_to_json(st.pose)},
    {"velocity", json{{"vx", st.vx}, {"vy", st.vy}}},
    {"valid", st.valid}};
}

inline AgentState state_from_json(const json & j) {
  AgentState st;
  st.step_index = j.at("step_index").get<std::int64_t>();
  st.pose = pose_from_json(j.at("pose"));
  st.vx = j.at("velocity").at("vx").get<double>();
  st.vy = j.at("velocity").at("vy").get<double>();
  st.valid = j.at("valid").get<bool>();
  return st;
}

}  // namespace json_detail

inline nlohmann::json scene_to_json(
  const Scene & scene, const std::optional<LofLabels> & labels = std::nullopt) {
  using nlohmann::json;
  using namespace json_detail;

  json agents = json::array();
  for (const auto & agent : scene.agents) {
    json states = json::array();
    for (const auto & st : agent.states) states.push_back(state_to_json(st));
    agents.push_back(json{
      {"agent_id", agent.agent_id},
      {"category", to_string(agent.category)},
      {"states", std::move(states)}});
  }

  json polygons = json::array();
  for (const auto & poly : scene.polygons) {
    polygons.push_back(json{
      {"polygon_id", poly.polygon_id},
      {"kind", to_string(poly.kind)},
      {"entry_pose", pose_to_json(poly.entry_pose)},
      {"point_ids", poly.point_ids}});
  }

  json points = json::array();
  for (const auto & pt : scene.points) {
    points.push_back(json{
      {"point_id", pt.point_id},
      {"polygon_id", pt.polygon_id},
      {"kind", to_string(pt.kind)},
      {"pose", pose_to_json(pt.pose)}});
  }

  json futures = json::array();
  for (const auto & fut : scene.futures) {
    json states = json::array();
    for (const auto & st : fut.states) states.push_back(state_to_json(st));
    futures.push_back(json{{"agent_id", fut.agent_id}, {"states", std::move(states)}});
  }

  json out{
    {"scene_id", scene.scene_id},
    {"dt", scene.dt},
    {"agents", std::move(agents)},
    {"polygons", std::move(polygons)},
    {"points", std::move(points)},
    {"futures", std::move(futures)}};

  if (labels.has_value()) {
    out["lof_labels"] = json{
      {"threshold", labels->threshold},
      {"keyframe_steps", labels->keyframe_steps},
      {"values", labels->values}};
  }
  return out;
}

inline Scene scene_from_json(const nlohmann::json & j, std::optional<LofLabels> * labels = nullptr) {
  using namespace json_detail;
  Scene scene;
  try {
    scene.scene_id = j.at("scene_id").get<std::string>();
    scene.dt = j.at("dt").get<double>();
    for (const auto & ja : j.at("agents")) {
      AgentHistory agent;
      agent.agent_id = ja.at("agent_id").get<std::int64_t>();
      agent.category = agent_category_from_string(ja.at("category").get<std::string>());
      for (const auto & js : ja.at("states")) agent.states.push_back(state_from_json(js));
      scene.agents.push_back(std::move(agent));
    }
    for (const auto & jp : j.at("polygons")) {
      MapPolygon poly;
      poly.polygon_id = jp.at("polygon_id").get<std::int64_t>();
      poly.kind = polygon_kind_from_string(jp.at("kind").get<std::string>());
      poly.entry_pose = pose_from_json(jp.at("entry_pose"));
      poly.point_ids = jp.at("point_ids").get<std::vector<std::int64_t>>();
      scene.polygons.push_back(std::move(poly));
    }
    for (const auto & jp : j.at("points")) {
      MapPoint pt;
      pt.point_id = jp.at("point_id").get<std::int64_t>();
      pt.polygon_id = jp.at("polygon_id").get<std::int64_t>();
      pt.kind = point_kind_from_string(jp.at("kind").get<std::string>());
      pt.pose = pose_from_json(jp.at("pose"));
      scene.points.push_back(std::move(pt));
    }
    for (const auto & jf : j.at("futures")) {
      AgentFuture fut;
      fut.agent_id = jf.at("agent_id").get<std::int64_t>();
      for (const auto & js : jf.at("states")) fut.states.push_back(state_from_json(js));
      scene.futures.push_back(std::move(fut));
    }
    if (labels != nullptr) {
      labels->reset();
      if (j.contains("lof_labels")) {
        LofLabels l;
        const auto & jl = j.at("lof_labels");
        l.threshold = jl.at("threshold").get<double>();
        l.keyframe_steps = jl.at("keyframe_steps").get<std::vector<std::int64_t>>();
        l.values = jl.at("values").get<std::vector<std::vector<int>>>();
        *labels = std::move(l);
      }
    }
  } catch (const nlohmann::json::exception & e) {
    throw DataError(std::string("malformed scenario json: ") + e.what());
  }
  return scene;
}

inline std::string read_text_file(const std::string & path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path + "'");
  return ss.str();
}

inline void write_text_file(const std::string & path, const std::string & content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline Scene load_scene(const std::string & path, std::optional<LofLabels> * labels = nullptr) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception & e) {
    throw DataError("cannot parse scenario '" + path + "': " + e.what());
  }
  return scene_from_json(j, labels);
}

inline void save_scene(
  const std::string & path, const Scene & scene,
  const std::optional<LofLabels> & labels = std::nullopt) {
  write_text_file(path, scene_to_json(scene, labels).dump(2) + "\n");
}

}  // namespace futurenet

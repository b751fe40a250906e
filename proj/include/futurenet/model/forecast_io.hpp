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
#include <string>
#include <vector>

#include <json.hpp>

#include "futurenet/core/error.hpp"
#include "futurenet/model/outputs.hpp"
#include "futurenet/scene/scene.hpp"

namespace futurenet {

// Forecast files carry one entry per agent (id, modes with probability,
// waypoints, and per-coordinate uncertainty scales) plus the optional
// occupancy field over the scene's map points.
inline nlohmann::json forecast_to_json(
  const Scene & scene, const TrajectoryForecast & fc, const LaneOccupancyField * lof = nullptr) {
  const std::int64_t na = fc.means.dim(0), k_modes = fc.means.dim(1), horizon = fc.means.dim(2);
  if (na != static_cast<std::int64_t>(scene.agents.size())) {
    throw DataError("forecast agent count does not match the scene");
  }
  nlohmann::json agents = nlohmann::json::array();
  for (std::int64_t a = 0; a < na; ++a) {
    nlohmann::json modes = nlohmann::json::array();
    for (std::int64_t k = 0; k < k_modes; ++k) {
      nlohmann::json waypoints = nlohmann::json::array();
      nlohmann::json scales = nlohmann::json::array();
      for (std::int64_t t = 0; t < horizon; ++t) {
        waypoints.push_back({fc.means.at(a, k, t, 0), fc.means.at(a, k, t, 1)});
        scales.push_back({fc.scales.at(a, k, t, 0), fc.scales.at(a, k, t, 1)});
      }
      modes.push_back(nlohmann::json{
        {"prob", fc.probs.at(a, k)},
        {"waypoints", std::move(waypoints)},
        {"scales", std::move(scales)}});
    }
    agents.push_back(nlohmann::json{
      {"agent_id", scene.agents[static_cast<std::size_t>(a)].agent_id},
      {"modes", std::move(modes)}});
  }
  nlohmann::json j{
    {"scene_id", scene.scene_id},
    {"n_agents", na},
    {"n_modes", k_modes},
    {"horizon", horizon},
    {"agents", std::move(agents)}};
  if (lof != nullptr && lof->enabled()) {
    nlohmann::json values = nlohmann::json::array();
    for (std::int64_t kf = 0; kf < lof->values.dim(0); ++kf) {
      nlohmann::json row = nlohmann::json::array();
      for (std::int64_t i = 0; i < lof->values.dim(1); ++i) row.push_back(lof->values.at(kf, i));
      values.push_back(std::move(row));
    }
    j["lof"] = nlohmann::json{{"keyframe_steps", lof->keyframe_steps}, {"values", std::move(values)}};
  }
  return j;
}

struct ParsedForecast {
  std::string scene_id;
  std::vector<std::int64_t> agent_ids;
  TrajectoryForecast forecast;
  LaneOccupancyField lof;  // empty when the file carries none
};

inline ParsedForecast forecast_from_json(const nlohmann::json & j) {
  ParsedForecast out;
  try {
    out.scene_id = j.value("scene_id", std::string());
    const std::int64_t na = j.at("n_agents").get<std::int64_t>();
    const std::int64_t k_modes = j.at("n_modes").get<std::int64_t>();
    const std::int64_t horizon = j.at("horizon").get<std::int64_t>();
    if (na < 1 || k_modes < 1 || horizon < 1) throw DataError("bad forecast dimensions");
    out.forecast.means = Tensor<double>::zeros({na, k_modes, horizon, 2});
    out.forecast.scales = Tensor<double>::zeros({na, k_modes, horizon, 2});
    out.forecast.probs = Tensor<double>::zeros({na, k_modes});
    const auto & agents = j.at("agents");
    if (static_cast<std::int64_t>(agents.size()) != na) throw DataError("bad agent count");
    for (std::int64_t a = 0; a < na; ++a) {
      const auto & agent = agents[static_cast<std::size_t>(a)];
      out.agent_ids.push_back(agent.at("agent_id").get<std::int64_t>());
      const auto & modes = agent.at("modes");
      if (static_cast<std::int64_t>(modes.size()) != k_modes) throw DataError("bad mode count");
      for (std::int64_t k = 0; k < k_modes; ++k) {
        const auto & mode = modes[static_cast<std::size_t>(k)];
        out.forecast.probs.at(a, k) = mode.at("prob").get<double>();
        const auto & wp = mode.at("waypoints");
        const auto & sc = mode.at("scales");
        if (static_cast<std::int64_t>(wp.size()) != horizon ||
            static_cast<std::int64_t>(sc.size()) != horizon) {
          throw DataError("bad waypoint count");
        }
        for (std::int64_t t = 0; t < horizon; ++t) {
          out.forecast.means.at(a, k, t, 0) = wp[static_cast<std::size_t>(t)][0].get<double>();
          out.forecast.means.at(a, k, t, 1) = wp[static_cast<std::size_t>(t)][1].get<double>();
          out.forecast.scales.at(a, k, t, 0) = sc[static_cast<std::size_t>(t)][0].get<double>();
          out.forecast.scales.at(a, k, t, 1) = sc[static_cast<std::size_t>(t)][1].get<double>();
        }
      }
    }
    if (j.contains("lof")) {
      const auto & lof = j.at("lof");
      lof.at("keyframe_steps").get_to(out.lof.keyframe_steps);
      const auto & values = lof.at("values");
      const auto n_kf = static_cast<std::int64_t>(values.size());
      const std::int64_t n_m = n_kf > 0 ? static_cast<std::int64_t>(values[0].size()) : 0;
      out.lof.values = Tensor<double>::zeros({n_kf, n_m});
      for (std::int64_t kf = 0; kf < n_kf; ++kf) {
        const auto & row = values[static_cast<std::size_t>(kf)];
        if (static_cast<std::int64_t>(row.size()) != n_m) throw DataError("ragged occupancy rows");
        for (std::int64_t i = 0; i < n_m; ++i) {
          out.lof.values.at(kf, i) = row[static_cast<std::size_t>(i)].get<double>();
        }
      }
    }
  } catch (const nlohmann::json::exception & e) {
    throw DataError(std::string("malformed forecast JSON: ") + e.what());
  }
  return out;
}

}  // namespace futurenet

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
#include <cstdint>

#include <json.hpp>

#include "futurenet/core/error.hpp"

namespace futurenet {

/// Network and decoding hyperparameters. Defaults are the full-size model;
/// tests shrink d_model and the mode count for speed.
struct ModelConfig {
  std::int64_t d_model = 128;
  std::int64_t n_heads = 8;
  std::int64_t n_modes = 6;
  std::int64_t n_keyframes = 3;
  std::int64_t layers_map = 1;
  std::int64_t layers_main = 2;
  std::int64_t layers_mode = 1;

  // Interaction radii in meters.
  double radius_map_map = 150.0;
  double radius_map_agent = 50.0;
  double radius_agent_agent = 50.0;
  double radius_map_tq = 150.0;
  double radius_agent_tq = 150.0;
  double radius_tq_mq = 10.0;
  double radius_mq_tq = 10.0;

  // Temporal attention windows in steps.
  std::int64_t span_temporal = 10;
  std::int64_t span_temporal_tq = 30;

  bool use_refinement = true;
  bool use_lof = true;

  // Horizon layout; must agree with the data.
  std::int64_t t_history = 10;
  std::int64_t t_future = 30;
  double dt = 0.1;

  std::int64_t segment_len() const { return t_future / n_keyframes; }
  std::int64_t rel_hidden() const { return std::max<std::int64_t>(16, d_model / 4); }

  void validate() const {
    if (d_model < 1 || n_heads < 1 || d_model % n_heads != 0) {
      throw ConfigError("d_model must be a positive multiple of n_heads");
    }
    if (n_modes < 1) throw ConfigError("n_modes must be >= 1");
    if (n_keyframes < 1 || t_future % n_keyframes != 0) {
      throw ConfigError("t_future must be divisible by n_keyframes");
    }
    if (layers_map < 1 || layers_main < 1 || layers_mode < 1) {
      throw ConfigError("layer counts must be >= 1");
    }
    for (const double r :
         {radius_map_map, radius_map_agent, radius_agent_agent, radius_map_tq, radius_agent_tq,
          radius_tq_mq, radius_mq_tq}) {
      if (!(r > 0.0)) throw ConfigError("all interaction radii must be positive");
    }
    if (span_temporal < 1 || span_temporal_tq < 1) {
      throw ConfigError("temporal spans must be >= 1");
    }
    if (t_history < 1 || t_future < 1) throw ConfigError("horizons must be >= 1");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  }
};

inline void to_json(nlohmann::json & j, const ModelConfig & c) {
  j = nlohmann::json{
    {"d_model", c.d_model},
    {"n_heads", c.n_heads},
    {"n_modes", c.n_modes},
    {"n_keyframes", c.n_keyframes},
    {"layers_map", c.layers_map},
    {"layers_main", c.layers_main},
    {"layers_mode", c.layers_mode},
    {"radius_map_map", c.radius_map_map},
    {"radius_map_agent", c.radius_map_agent},
    {"radius_agent_agent", c.radius_agent_agent},
    {"radius_map_tq", c.radius_map_tq},
    {"radius_agent_tq", c.radius_agent_tq},
    {"radius_tq_mq", c.radius_tq_mq},
    {"radius_mq_tq", c.radius_mq_tq},
    {"span_temporal", c.span_temporal},
    {"span_temporal_tq", c.span_temporal_tq},
    {"use_refinement", c.use_refinement},
    {"use_lof", c.use_lof},
    {"t_history", c.t_history},
    {"t_future", c.t_future},
    {"dt", c.dt}};
}

inline void from_json(const nlohmann::json & j, ModelConfig & c) {
  const auto get = [&](const char * key, auto & field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("d_model", c.d_model);
  get("n_heads", c.n_heads);
  get("n_modes", c.n_modes);
  get("n_keyframes", c.n_keyframes);
  get("layers_map", c.layers_map);
  get("layers_main", c.layers_main);
  get("layers_mode", c.layers_mode);
  get("radius_map_map", c.radius_map_map);
  get("radius_map_agent", c.radius_map_agent);
  get("radius_agent_agent", c.radius_agent_agent);
  get("radius_map_tq", c.radius_map_tq);
  get("radius_agent_tq", c.radius_agent_tq);
  get("radius_tq_mq", c.radius_tq_mq);
  get("radius_mq_tq", c.radius_mq_tq);
  get("span_temporal", c.span_temporal);
  get("span_temporal_tq", c.span_temporal_tq);
  get("use_refinement", c.use_refinement);
  get("use_lof", c.use_lof);
  get("t_history", c.t_history);
  get("t_future", c.t_future);
  get("dt", c.dt);
}

}  // namespace futurenet

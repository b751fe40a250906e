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

#include <string>
#include <vector>

#include "futurenet/geom/features.hpp"
#include "futurenet/geom/neighborhoods.hpp"
#include "futurenet/model/attention.hpp"
#include "futurenet/model/config.hpp"
#include "futurenet/scene/scene.hpp"

namespace futurenet {

// Scene encoder. Every element (map point, map polygon, agent state) lives in
// its own local frame; features are frame-invariant attributes and all
// cross-element structure enters through pairwise descriptors. Agent state
// rows are flattened as row = agent * T_h + step.

/// Everything about one scene that does not depend on parameters: invariant
/// attributes, anchors, attention edges, and raw edge descriptors. Built once
/// per scene and reused across training steps.
struct EncoderPlan {
  std::int64_t n_agents = 0;
  std::int64_t t_history = 0;
  std::int64_t n_points = 0;
  std::int64_t n_polygons = 0;
  double dt = 0.1;

  Tensor<double> point_attr;    // [n_points, kPointFeatureDim]
  Tensor<double> polygon_attr;  // [n_polygons, kPolygonFeatureDim]
  Tensor<double> state_attr;    // [n_agents * t_history, kAgentFeatureDim]

  std::vector<Anchor> point_anchors;
  std::vector<Anchor> polygon_anchors;
  std::vector<Anchor> state_anchors;    // flattened, step-stamped
  std::vector<Anchor> current_anchors;  // one per agent, at the last observed step
  std::vector<bool> state_valid;

  EdgeList e_point_polygon;    // polygon <- its own points
  EdgeList e_polygon_polygon;  // radius map_map
  EdgeList e_temporal;         // per agent, strict past within span
  EdgeList e_polygon_agent;    // agent state <- polygons, radius map_agent
  EdgeList e_agent_agent;      // agent state <- states at the same step, radius agent_agent

  Tensor<double> d_point_polygon;
  Tensor<double> d_polygon_polygon;
  Tensor<double> d_temporal;
  Tensor<double> d_polygon_agent;
  Tensor<double> d_agent_agent;
};

inline EncoderPlan make_encoder_plan(const Scene & scene, const ModelConfig & cfg) {
  EncoderPlan plan;
  const SceneIndex index(scene);
  plan.n_agents = static_cast<std::int64_t>(scene.agents.size());
  plan.t_history = scene.history_len();
  plan.n_points = static_cast<std::int64_t>(scene.points.size());
  plan.n_polygons = static_cast<std::int64_t>(scene.polygons.size());
  plan.dt = scene.dt;

  plan.point_attr = map_point_features(scene, index);
  plan.polygon_attr = map_polygon_features(scene, index);
  plan.point_anchors = map_point_anchors(scene);
  plan.polygon_anchors = polygon_anchors(scene);

  const std::int64_t n_states = plan.n_agents * plan.t_history;
  plan.state_attr = Tensor<double>::zeros({n_states, kAgentFeatureDim});
  plan.state_anchors.reserve(static_cast<std::size_t>(n_states));
  plan.state_valid.reserve(static_cast<std::size_t>(n_states));
  for (std::int64_t a = 0; a < plan.n_agents; ++a) {
    const AgentHistory & agent = scene.agents[static_cast<std::size_t>(a)];
    const Tensor<double> f = agent_state_features(agent);
    for (std::int64_t t = 0; t < plan.t_history; ++t) {
      for (int j = 0; j < kAgentFeatureDim; ++j) {
        plan.state_attr.at(a * plan.t_history + t, j) = f.at(t, j);
      }
    }
    for (const Anchor & an : agent_state_anchors(agent)) plan.state_anchors.push_back(an);
    for (const AgentState & st : agent.states) plan.state_valid.push_back(st.valid);
    plan.current_anchors.push_back(
      anchor_of(agent.current().pose, agent.current().step_index));
  }

  {
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    for (std::size_t pi = 0; pi < scene.polygons.size(); ++pi) {
      for (auto pid : scene.polygons[pi].point_ids) {
        pairs.emplace_back(static_cast<std::int64_t>(pi), index.point_row.at(pid));
      }
    }
    plan.e_point_polygon = make_edges(plan.n_polygons, pairs);
  }
  plan.e_polygon_polygon =
    radius_edges(plan.polygon_anchors, plan.polygon_anchors, cfg.radius_map_map);

  {
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    for (std::int64_t a = 0; a < plan.n_agents; ++a) {
      for (std::int64_t i = 0; i < plan.t_history; ++i) {
        if (!plan.state_valid[static_cast<std::size_t>(a * plan.t_history + i)]) continue;
        for (std::int64_t j = std::max<std::int64_t>(0, i - cfg.span_temporal); j < i; ++j) {
          if (!plan.state_valid[static_cast<std::size_t>(a * plan.t_history + j)]) continue;
          pairs.emplace_back(a * plan.t_history + i, a * plan.t_history + j);
        }
      }
    }
    plan.e_temporal = make_edges(n_states, pairs);
  }

  {
    const double r2 = cfg.radius_map_agent * cfg.radius_map_agent;
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    for (std::int64_t row = 0; row < n_states; ++row) {
      if (!plan.state_valid[static_cast<std::size_t>(row)]) continue;
      const Anchor & q = plan.state_anchors[static_cast<std::size_t>(row)];
      for (std::int64_t pi = 0; pi < plan.n_polygons; ++pi) {
        const Anchor & k = plan.polygon_anchors[static_cast<std::size_t>(pi)];
        const double dx = k.x - q.x, dy = k.y - q.y;
        if (dx * dx + dy * dy <= r2) pairs.emplace_back(row, pi);
      }
    }
    plan.e_polygon_agent = make_edges(n_states, pairs);
  }

  {
    const double r2 = cfg.radius_agent_agent * cfg.radius_agent_agent;
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    for (std::int64_t row = 0; row < n_states; ++row) {
      if (!plan.state_valid[static_cast<std::size_t>(row)]) continue;
      const std::int64_t t = row % plan.t_history;
      const Anchor & q = plan.state_anchors[static_cast<std::size_t>(row)];
      for (std::int64_t a2 = 0; a2 < plan.n_agents; ++a2) {
        const std::int64_t key = a2 * plan.t_history + t;
        if (!plan.state_valid[static_cast<std::size_t>(key)]) continue;
        const Anchor & k = plan.state_anchors[static_cast<std::size_t>(key)];
        const double dx = k.x - q.x, dy = k.y - q.y;
        if (dx * dx + dy * dy <= r2) pairs.emplace_back(row, key);
      }
    }
    plan.e_agent_agent = make_edges(n_states, pairs);
  }

  plan.d_point_polygon = edge_descriptor_features(
    plan.polygon_anchors, plan.point_anchors, plan.e_point_polygon, plan.dt);
  plan.d_polygon_polygon = edge_descriptor_features(
    plan.polygon_anchors, plan.polygon_anchors, plan.e_polygon_polygon, plan.dt);
  plan.d_temporal =
    edge_descriptor_features(plan.state_anchors, plan.state_anchors, plan.e_temporal, plan.dt);
  plan.d_polygon_agent = edge_descriptor_features(
    plan.state_anchors, plan.polygon_anchors, plan.e_polygon_agent, plan.dt);
  plan.d_agent_agent =
    edge_descriptor_features(plan.state_anchors, plan.state_anchors, plan.e_agent_agent, plan.dt);
  return plan;
}

/// Encoded scene features on one graph, plus the constant anchor sets the
/// decoder attends against.
template <typename T>
struct EncodedScene {
  Var point_feat;    // [n_points, D]
  Var polygon_feat;  // [n_polygons, D]
  Var state_feat;    // [n_agents * t_history, D]
  AnchorSet<T> point_anchors;
  AnchorSet<T> polygon_anchors;
  AnchorSet<T> state_anchors;
  AnchorSet<T> current_anchors;
  const EncoderPlan * plan = nullptr;
};

inline void register_encoder(ParamStore & ps, const ModelConfig & cfg) {
  const std::int64_t d = cfg.d_model;
  const std::int64_t rh = cfg.rel_hidden();
  register_mlp2(ps, "enc.point_embed", kPointFeatureDim, d, d);
  register_mlp2(ps, "enc.poly_embed", kPolygonFeatureDim, d, d);
  register_mlp2(ps, "enc.agent_embed", kAgentFeatureDim, d, d);
  register_local_world_stage(ps, "enc.p2g", d, rh, cfg.layers_map);
  register_local_world_stage(ps, "enc.g2g", d, rh, cfg.layers_map);
  register_local_world_stage(ps, "enc.temporal", d, rh, cfg.layers_main);
  register_local_world_stage(ps, "enc.m2a", d, rh, cfg.layers_main);
  register_local_world_stage(ps, "enc.a2a", d, rh, cfg.layers_main);
}

template <typename T>
EncodedScene<T> encode_scene(
  Graph<T> & g, const BoundParams & p, const ModelConfig & cfg, const EncoderPlan & plan) {
  EncodedScene<T> enc;
  enc.plan = &plan;
  enc.point_anchors = constant_anchors(g, plan.point_anchors);
  enc.polygon_anchors = constant_anchors(g, plan.polygon_anchors);
  enc.state_anchors = constant_anchors(g, plan.state_anchors);
  enc.current_anchors = constant_anchors(g, plan.current_anchors);

  const auto upload = [&g](const Tensor<double> & t) {
    return g.constant(t.template cast<T>());
  };

  enc.point_feat = apply_mlp2(g, p, "enc.point_embed", upload(plan.point_attr));

  Var poly = apply_mlp2(g, p, "enc.poly_embed", upload(plan.polygon_attr));
  poly = attention_stage(
    g, p, "enc.p2g", poly, enc.point_feat, upload(plan.d_point_polygon), plan.e_point_polygon,
    cfg.layers_map, cfg.n_heads);
  poly = attention_stage(
    g, p, "enc.g2g", poly, poly, upload(plan.d_polygon_polygon), plan.e_polygon_polygon,
    cfg.layers_map, cfg.n_heads, /*self_keys=*/true);
  enc.polygon_feat = poly;

  Var state = apply_mlp2(g, p, "enc.agent_embed", upload(plan.state_attr));
  state = attention_stage(
    g, p, "enc.temporal", state, state, upload(plan.d_temporal), plan.e_temporal,
    cfg.layers_main, cfg.n_heads, /*self_keys=*/true);
  state = attention_stage(
    g, p, "enc.m2a", state, poly, upload(plan.d_polygon_agent), plan.e_polygon_agent,
    cfg.layers_main, cfg.n_heads);
  state = attention_stage(
    g, p, "enc.a2a", state, state, upload(plan.d_agent_agent), plan.e_agent_agent,
    cfg.layers_main, cfg.n_heads, /*self_keys=*/true);
  enc.state_feat = state;
  return enc;
}

}  // namespace futurenet

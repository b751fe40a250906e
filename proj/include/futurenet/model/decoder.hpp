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
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "futurenet/lof/labels.hpp"
#include "futurenet/model/encoder.hpp"
#include "futurenet/model/outputs.hpp"

namespace futurenet {

// Trajectory decoder. One trajectory query per (agent, mode) pair, stored as
// row agent * K + mode. Queries decode the future in N_kf segments; between
// segments they re-anchor to their own predicted endpoints and re-attend to
// the scene from there. Map queries (one per sampled map point) pick up
// per-keyframe occupancy through query exchanges gated at close range.

namespace detail {

/// Queries attend to their own agent's observed states: key step j satisfies
/// j <= query anchor step and anchor_step - j <= span.
inline EdgeList query_temporal_edges(
  const std::vector<Anchor> & query_anchors, const EncoderPlan & plan, std::int64_t n_modes,
  std::int64_t span) {
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  const auto nq = static_cast<std::int64_t>(query_anchors.size());
  for (std::int64_t q = 0; q < nq; ++q) {
    const std::int64_t agent = q / n_modes;
    const std::int64_t step = query_anchors[static_cast<std::size_t>(q)].step;
    for (std::int64_t j = std::max<std::int64_t>(0, step - span);
         j <= std::min(step, plan.t_history - 1); ++j) {
      const std::int64_t key = agent * plan.t_history + j;
      if (plan.state_valid[static_cast<std::size_t>(key)]) pairs.emplace_back(q, key);
    }
  }
  return make_edges(nq, pairs);
}

/// Same-mode queries of other agents within `radius` meters.
inline EdgeList mode_peer_edges(
  const std::vector<Anchor> & query_anchors, std::int64_t n_agents, std::int64_t n_modes,
  double radius) {
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  const double r2 = radius * radius;
  for (std::int64_t a = 0; a < n_agents; ++a) {
    for (std::int64_t k = 0; k < n_modes; ++k) {
      const std::int64_t q = a * n_modes + k;
      const Anchor & qa = query_anchors[static_cast<std::size_t>(q)];
      for (std::int64_t b = 0; b < n_agents; ++b) {
        if (b == a) continue;
        const std::int64_t key = b * n_modes + k;
        const Anchor & ka = query_anchors[static_cast<std::size_t>(key)];
        const double dx = ka.x - qa.x, dy = ka.y - qa.y;
        if (dx * dx + dy * dy <= r2) pairs.emplace_back(q, key);
      }
    }
  }
  return make_edges(n_agents * n_modes, pairs);
}

/// All modes of the same agent, self included. No distance gate.
inline EdgeList mode_set_edges(std::int64_t n_agents, std::int64_t n_modes) {
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  for (std::int64_t a = 0; a < n_agents; ++a) {
    for (std::int64_t k = 0; k < n_modes; ++k) {
      for (std::int64_t k2 = 0; k2 < n_modes; ++k2) {
        pairs.emplace_back(a * n_modes + k, a * n_modes + k2);
      }
    }
  }
  return make_edges(n_agents * n_modes, pairs);
}

}  // namespace detail

/// Graph-side outputs of one forward pass. Proposal and refined trajectories
/// are both kept; their world mirrors are exact doubles for selection and
/// evaluation. `lof` is invalid when the occupancy branch is disabled.
template <typename T>
struct DecodeOutputs {
  WaypointsVar<T> proposals;  // [N_A * K, 2 * T] world frame
  Var proposal_scales;        // [N_A * K, 2 * T], >= 1e-3
  WaypointsVar<T> refined;    // [N_A * K, 2 * T]
  Var refined_scales;         // [N_A * K, 2 * T]
  Var mode_logits;            // [N_A, K]
  Var lof;                    // [N_kf, N_m] in [1e-7, 1 - 1e-7]
  std::vector<std::int64_t> keyframe_steps;
  std::int64_t n_agents = 0;
  std::int64_t n_modes = 0;
  std::int64_t horizon = 0;
};

inline void register_decoder(ParamStore & ps, const ModelConfig & cfg) {
  const std::int64_t d = cfg.d_model;
  const std::int64_t rh = cfg.rel_hidden();
  const std::int64_t wseg = 2 * cfg.segment_len();

  ps.add("dec.mode_embed", {cfg.n_modes, d}, InitKind::kFanInUniform);
  register_local_world_stage(ps, "dec.init.temporal", d, rh, cfg.layers_main);
  register_local_world_stage(ps, "dec.init.m2tq", d, rh, cfg.layers_main);
  register_local_world_stage(ps, "dec.init.a2tq", d, rh, cfg.layers_main);
  register_local_world_stage(ps, "dec.init.p2tq", d, rh, cfg.layers_main);
  register_local_world_stage(ps, "dec.init.mode", d, rh, cfg.layers_mode, /*with_rel=*/false);
  register_mlp2(ps, "dec.propose", d, d, wseg);
  register_mlp2(ps, "dec.propose_scale", d, d, wseg);

  if (cfg.n_keyframes > 1) {
    register_local_world_stage(ps, "dec.fce.temporal", d, rh, cfg.layers_main);
    register_local_world_stage(ps, "dec.fce.m2tq", d, rh, cfg.layers_main);
    register_local_world_stage(ps, "dec.fce.a2tq", d, rh, cfg.layers_main);
    if (cfg.use_lof) {
      register_local_world_stage(ps, "dec.fce.tq2mq", d, rh, cfg.layers_main);
      register_local_world_stage(ps, "dec.fce.mq2tq", d, rh, cfg.layers_main);
    }
    register_local_world_stage(ps, "dec.fce.mode", d, rh, cfg.layers_mode, /*with_rel=*/false);
  } else if (cfg.use_lof) {
    // One-shot decoding still runs the final occupancy exchange.
    register_local_world_stage(ps, "dec.fce.tq2mq", d, rh, cfg.layers_main);
  }
  if (cfg.use_lof) register_mlp2(ps, "dec.lof_head", d, d, 1);

  if (cfg.use_refinement) {
    register_gru(ps, "dec.gru", 2, d);
    register_local_world_stage(ps, "dec.ref.temporal", d, rh, cfg.layers_main);
    register_local_world_stage(ps, "dec.ref.m2tq", d, rh, cfg.layers_main);
    register_local_world_stage(ps, "dec.ref.a2tq", d, rh, cfg.layers_main);
    if (cfg.use_lof) register_local_world_stage(ps, "dec.ref.mq2rq", d, rh, cfg.layers_main);
    register_local_world_stage(ps, "dec.ref.mode", d, rh, cfg.layers_mode, /*with_rel=*/false);
    register_mlp2(ps, "dec.ref.offsets", d, d, 2 * cfg.t_future);
    register_mlp2(ps, "dec.ref.scales", d, d, 2 * cfg.t_future);
    register_mlp2(ps, "dec.ref.logit", d, d, 1);
  }
}

inline void register_model(ParamStore & ps, const ModelConfig & cfg) {
  register_encoder(ps, cfg);
  register_decoder(ps, cfg);
}

/// Column-concatenation of consecutive trajectory segments.
template <typename T>
WaypointsVar<T> concat_waypoints(
  Graph<T> & g, const WaypointsVar<T> & a, const WaypointsVar<T> & b) {
  WaypointsVar<T> out;
  out.var = g.concat_cols(a.var, b.var);
  out.n_steps = a.n_steps + b.n_steps;
  const std::int64_t n = a.world.shape()[0];
  const std::int64_t wa = a.world.shape()[1], wb = b.world.shape()[1];
  out.world = Tensor<double>::zeros({n, wa + wb});
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < wa; ++j) out.world.at(i, j) = a.world.at(i, j);
    for (std::int64_t j = 0; j < wb; ++j) out.world.at(i, wa + j) = b.world.at(i, j);
  }
  return out;
}

template <typename T>
DecodeOutputs<T> decode_scene(
  Graph<T> & g, const BoundParams & p, const ModelConfig & cfg, const EncodedScene<T> & enc) {
  const EncoderPlan & plan = *enc.plan;
  const std::int64_t na = plan.n_agents;
  const std::int64_t k_modes = cfg.n_modes;
  const std::int64_t nq = na * k_modes;
  const std::int64_t d = cfg.d_model;
  const std::int64_t heads = cfg.n_heads;
  const std::int64_t tseg = cfg.segment_len();
  const double dt = plan.dt;

  DecodeOutputs<T> out;
  out.n_agents = na;
  out.n_modes = k_modes;
  out.horizon = cfg.t_future;
  out.keyframe_steps = keyframe_steps_for(cfg.t_future, cfg.n_keyframes);

  // Trajectory queries start as learned mode embeddings anchored at each
  // agent's current pose.
  std::vector<std::int64_t> mode_rows(static_cast<std::size_t>(nq));
  std::vector<Anchor> start_anchors(static_cast<std::size_t>(nq));
  for (std::int64_t a = 0; a < na; ++a) {
    for (std::int64_t k = 0; k < k_modes; ++k) {
      mode_rows[static_cast<std::size_t>(a * k_modes + k)] = k;
      start_anchors[static_cast<std::size_t>(a * k_modes + k)] =
        plan.current_anchors[static_cast<std::size_t>(a)];
    }
  }
  Var tq = g.gather_rows(p("dec.mode_embed"), mode_rows);
  AnchorSet<T> tq_anchor = constant_anchors(g, start_anchors);

  const EdgeList e_mode = detail::mode_set_edges(na, k_modes);

  // The three context stages shared by query initialization, future-context
  // re-encoding, and refinement, differing only in parameter prefix.
  const auto context_stages = [&](const std::string & prefix, Var q, const AnchorSet<T> & an) {
    const std::vector<Anchor> snap = an.anchors();
    q = local_world_stage(
      g, p, prefix + ".temporal", q, an, enc.state_feat, enc.state_anchors,
      detail::query_temporal_edges(snap, plan, k_modes, cfg.span_temporal_tq), cfg.layers_main,
      heads, dt);
    q = local_world_stage(
      g, p, prefix + ".m2tq", q, an, enc.polygon_feat, enc.polygon_anchors,
      radius_edges(snap, plan.polygon_anchors, cfg.radius_map_tq), cfg.layers_main, heads, dt);
    q = local_world_stage(
      g, p, prefix + ".a2tq", q, an, q, an,
      detail::mode_peer_edges(snap, na, k_modes, cfg.radius_agent_tq), cfg.layers_main, heads,
      dt, /*self_keys=*/true);
    return q;
  };

  {
    const std::vector<Anchor> snap = tq_anchor.anchors();
    tq = context_stages("dec.init", tq, tq_anchor);
    tq = local_world_stage(
      g, p, "dec.init.p2tq", tq, tq_anchor, enc.point_feat, enc.point_anchors,
      radius_edges(snap, plan.point_anchors, cfg.radius_mq_tq), cfg.layers_main, heads, dt);
    tq = attention_stage(
      g, p, "dec.init.mode", tq, tq, Var{}, e_mode, cfg.layers_mode, heads, /*self_keys=*/true);
  }

  // Map queries start from the encoded point features and accumulate
  // occupancy evidence through the per-keyframe exchanges.
  Var mq = cfg.use_lof ? enc.point_feat : Var{};
  Var lof;
  const auto occupancy_exchange = [&](const AnchorSet<T> & an) {
    mq = local_world_stage(
      g, p, "dec.fce.tq2mq", mq, enc.point_anchors, tq, an,
      radius_edges(plan.point_anchors, an.anchors(), cfg.radius_tq_mq), cfg.layers_main, heads,
      dt);
    Var row = g.clampv(
      g.sigmoid(apply_mlp2(g, p, "dec.lof_head", mq)), 1e-7, 1.0 - 1e-7);
    row = g.reshape(row, {1, plan.n_points});
    lof = lof.valid() ? g.concat_rows(lof, row) : row;
  };

  const auto decode_segment = [&](const AnchorSet<T> & an) {
    Var local = apply_mlp2(g, p, "dec.propose", tq);
    Var scale = g.add_scalar(g.softplus(apply_mlp2(g, p, "dec.propose_scale", tq)), 1e-3);
    return std::make_pair(compose_waypoints(g, an, local), scale);
  };

  auto [segment, seg_scale] = decode_segment(tq_anchor);
  WaypointsVar<T> proposal = segment;
  Var proposal_scales = seg_scale;
  AnchorSet<T> cur = tq_anchor;

  for (std::int64_t kf = 2; kf <= cfg.n_keyframes; ++kf) {
    cur = reanchor(g, cur, segment);
    const std::vector<Anchor> snap = cur.anchors();
    tq = context_stages("dec.fce", tq, cur);
    if (cfg.use_lof) {
      occupancy_exchange(cur);
      tq = local_world_stage(
        g, p, "dec.fce.mq2tq", tq, cur, mq, enc.point_anchors,
        radius_edges(snap, plan.point_anchors, cfg.radius_mq_tq), cfg.layers_main, heads, dt);
    }
    tq = attention_stage(
      g, p, "dec.fce.mode", tq, tq, Var{}, e_mode, cfg.layers_mode, heads, /*self_keys=*/true);
    std::tie(segment, seg_scale) = decode_segment(cur);
    proposal = concat_waypoints(g, proposal, segment);
    proposal_scales = g.concat_cols(proposal_scales, seg_scale);
  }

  AnchorSet<T> final_anchor = reanchor(g, cur, segment);
  if (cfg.use_lof) occupancy_exchange(final_anchor);

  out.proposals = proposal;
  out.proposal_scales = proposal_scales;
  out.lof = lof;

  if (cfg.use_refinement) {
    // Refinement queries summarize each proposal as a recurrent encoding of
    // its waypoints seen from the endpoint frame.
    Var local_traj = waypoints_to_anchor_frame(g, final_anchor, proposal);
    Var h = g.constant(Tensor<T>::zeros({nq, d}));
    for (std::int64_t t = 0; t < cfg.t_future; ++t) {
      h = apply_gru_cell(g, p, "dec.gru", g.slice_cols(local_traj, 2 * t, 2 * t + 2), h);
    }
    Var rq = h;
    rq = context_stages("dec.ref", rq, final_anchor);
    if (cfg.use_lof) {
      rq = local_world_stage(
        g, p, "dec.ref.mq2rq", rq, final_anchor, mq, enc.point_anchors,
        radius_edges(final_anchor.anchors(), plan.point_anchors, cfg.radius_mq_tq),
        cfg.layers_main, heads, dt);
    }
    rq = attention_stage(
      g, p, "dec.ref.mode", rq, rq, Var{}, e_mode, cfg.layers_mode, heads, /*self_keys=*/true);

    Var offsets = apply_mlp2(g, p, "dec.ref.offsets", rq);
    out.refined = offset_waypoints(g, final_anchor, proposal, offsets);
    out.refined_scales =
      g.add_scalar(g.softplus(apply_mlp2(g, p, "dec.ref.scales", rq)), 1e-3);
    out.mode_logits = g.reshape(apply_mlp2(g, p, "dec.ref.logit", rq), {na, k_modes});
  } else {
    out.refined = proposal;
    out.refined_scales = proposal_scales;
    out.mode_logits = g.constant(Tensor<T>::zeros({na, k_modes}));
  }
  return out;
}

/// Full forward pass from a prepared scene plan.
template <typename T>
DecodeOutputs<T> forward_scene(
  Graph<T> & g, const BoundParams & p, const ModelConfig & cfg, const EncoderPlan & plan) {
  const EncodedScene<T> enc = encode_scene(g, p, cfg, plan);
  return decode_scene(g, p, cfg, enc);
}

/// Value-side forecast extraction: exact world-frame means, positive scales,
/// per-agent mode probabilities.
template <typename T>
TrajectoryForecast to_forecast(const Graph<T> & g, const DecodeOutputs<T> & out) {
  const std::int64_t na = out.n_agents, k_modes = out.n_modes, t = out.horizon;
  TrajectoryForecast fc;
  fc.means = Tensor<double>::zeros({na, k_modes, t, 2});
  fc.scales = Tensor<double>::zeros({na, k_modes, t, 2});
  fc.probs = Tensor<double>::zeros({na, k_modes});
  const Tensor<T> & sc = g.value(out.refined_scales);
  for (std::int64_t a = 0; a < na; ++a) {
    for (std::int64_t k = 0; k < k_modes; ++k) {
      const std::int64_t row = a * k_modes + k;
      for (std::int64_t step = 0; step < t; ++step) {
        for (std::int64_t c = 0; c < 2; ++c) {
          fc.means.at(a, k, step, c) = out.refined.world.at(row, 2 * step + c);
          fc.scales.at(a, k, step, c) = static_cast<double>(sc.at(row, 2 * step + c));
        }
      }
    }
  }
  const Tensor<T> & logits = g.value(out.mode_logits);
  for (std::int64_t a = 0; a < na; ++a) {
    double mx = -1e300;
    for (std::int64_t k = 0; k < k_modes; ++k) {
      mx = std::max(mx, static_cast<double>(logits.at(a, k)));
    }
    double z = 0.0;
    for (std::int64_t k = 0; k < k_modes; ++k) {
      const double e = std::exp(static_cast<double>(logits.at(a, k)) - mx);
      fc.probs.at(a, k) = e;
      z += e;
    }
    for (std::int64_t k = 0; k < k_modes; ++k) fc.probs.at(a, k) /= z;
  }
  return fc;
}

/// Value-side occupancy extraction; empty when the branch is disabled.
template <typename T>
LaneOccupancyField to_lof(const Graph<T> & g, const DecodeOutputs<T> & out) {
  LaneOccupancyField field;
  if (!out.lof.valid()) return field;
  const Tensor<T> & v = g.value(out.lof);
  field.values = Tensor<double>::zeros(v.shape());
  for (std::int64_t i = 0; i < v.numel(); ++i) {
    field.values[i] = static_cast<double>(v.data()[i]);
  }
  field.keyframe_steps = out.keyframe_steps;
  return field;
}

}  // namespace futurenet

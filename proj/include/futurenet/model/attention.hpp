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

#include "futurenet/core/nn.hpp"
#include "futurenet/geom/neighborhoods.hpp"
#include "futurenet/model/geometry_ops.hpp"

namespace futurenet {

/// Parameters of one attention + feed-forward block. with_rel controls the
/// pairwise-descriptor embedding (mode-to-mode attention carries none).
inline void register_attention_block(
  ParamStore & ps, const std::string & name, std::int64_t d, std::int64_t rel_hidden,
  bool with_rel = true) {
  register_layer_norm(ps, name + ".ln_q", d);
  register_layer_norm(ps, name + ".ln_kv", d);
  register_linear(ps, name + ".q", d, d);
  register_linear(ps, name + ".k", d, d);
  register_linear(ps, name + ".v", d, d);
  register_linear(ps, name + ".o", d, d);
  if (with_rel) register_mlp2(ps, name + ".rel", kDescriptorDim, rel_hidden, d);
  register_layer_norm(ps, name + ".ln_ffn", d);
  register_mlp2(ps, name + ".ffn", d, 2 * d, d);
}

/// One layer of local-world attention. Keys and values are the key features
/// augmented (by sum) with the embedded pairwise descriptor of each edge,
/// followed by a residual update and a feed-forward block. Queries with no
/// edges pass through the entire layer unchanged.
///
/// rel_raw is the [n_edges, 6] descriptor feature tensor, or an invalid Var
/// for stages without a positional term.
template <typename T>
Var attention_block(
  Graph<T> & g, const BoundParams & p, const std::string & name, Var queries, Var keys,
  Var rel_raw, const EdgeList & edges, std::int64_t n_heads) {
  const std::int64_t nq = g.value(queries).shape()[0];
  std::vector<double> mask(static_cast<std::size_t>(nq), 0.0);
  for (std::int64_t q = 0; q < nq; ++q) {
    if (edges.offsets[static_cast<std::size_t>(q) + 1] > edges.offsets[static_cast<std::size_t>(q)]) {
      mask[static_cast<std::size_t>(q)] = 1.0;
    }
  }

  Var q_all = apply_linear(g, p, name + ".q", apply_layer_norm(g, p, name + ".ln_q", queries));
  Var kv_norm = apply_layer_norm(g, p, name + ".ln_kv", keys);
  Var k_all = apply_linear(g, p, name + ".k", kv_norm);
  Var v_all = apply_linear(g, p, name + ".v", kv_norm);

  Var q_e = g.gather_rows(q_all, edges.queries);
  Var k_e = g.gather_rows(k_all, edges.keys);
  Var v_e = g.gather_rows(v_all, edges.keys);
  if (rel_raw.valid()) {
    Var rel = apply_mlp2(g, p, name + ".rel", rel_raw);
    k_e = g.add(k_e, rel);
    v_e = g.add(v_e, rel);
  }

  Var logits = g.head_dot(q_e, k_e, n_heads);
  Var attn = g.segment_softmax(logits, edges.offsets);
  Var pooled = g.attention_pool(attn, v_e, edges.offsets, nq);
  Var updated = g.add(queries, g.row_mask(apply_linear(g, p, name + ".o", pooled), mask));

  Var ffn = apply_mlp2(g, p, name + ".ffn", apply_layer_norm(g, p, name + ".ln_ffn", updated));
  return g.add(updated, g.row_mask(ffn, std::move(mask)));
}

/// Layered blocks named "<name>.<layer>" over a fixed descriptor tensor.
/// Self-attention stages (self_keys = true) re-key each layer on the updated
/// query features.
template <typename T>
Var attention_stage(
  Graph<T> & g, const BoundParams & p, const std::string & name, Var queries, Var keys,
  Var rel_raw, const EdgeList & edges, std::int64_t layers, std::int64_t n_heads,
  bool self_keys = false) {
  Var out = queries;
  for (std::int64_t layer = 0; layer < layers; ++layer) {
    Var layer_keys = self_keys ? out : keys;
    out = attention_block(
      g, p, name + "." + std::to_string(layer), out, layer_keys, rel_raw, edges, n_heads);
  }
  return out;
}

/// Stage wrapper computing the descriptor embedding from (differentiable)
/// anchor sets, for stages whose anchors carry gradients.
template <typename T>
Var local_world_stage(
  Graph<T> & g, const BoundParams & p, const std::string & name, Var queries,
  const AnchorSet<T> & query_anchors, Var keys, const AnchorSet<T> & key_anchors,
  const EdgeList & edges, std::int64_t layers, std::int64_t n_heads, double dt,
  bool self_keys = false) {
  Var rel = relative_descriptors(g, query_anchors, key_anchors, edges, dt);
  return attention_stage(g, p, name, queries, keys, rel, edges, layers, n_heads, self_keys);
}

inline void register_local_world_stage(
  ParamStore & ps, const std::string & name, std::int64_t d, std::int64_t rel_hidden,
  std::int64_t layers, bool with_rel = true) {
  for (std::int64_t layer = 0; layer < layers; ++layer) {
    register_attention_block(ps, name + "." + std::to_string(layer), d, rel_hidden, with_rel);
  }
}

}  // namespace futurenet

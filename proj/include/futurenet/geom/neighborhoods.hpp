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
#include <utility>
#include <vector>

#include "futurenet/core/tensor.hpp"
#include "futurenet/geom/descriptors.hpp"

namespace futurenet {

/// Sparse attention pattern in CSR form: edges are grouped by query row.
/// offsets has n_queries + 1 entries; edge e with offsets[q] <= e < offsets[q+1]
/// connects query q to key keys[e]. queries[e] mirrors the grouping.
struct EdgeList {
  std::int64_t n_queries = 0;
  std::vector<std::int64_t> offsets;
  std::vector<std::int64_t> queries;
  std::vector<std::int64_t> keys;

  std::int64_t n_edges() const { return static_cast<std::int64_t>(keys.size()); }
};

/// Assemble a CSR edge list from (query, key) pairs that are already sorted
/// by query (ties keep insertion order).
inline EdgeList make_edges(
  std::int64_t n_queries, const std::vector<std::pair<std::int64_t, std::int64_t>> & pairs) {
  EdgeList e;
  e.n_queries = n_queries;
  e.offsets.assign(static_cast<std::size_t>(n_queries) + 1, 0);
  e.queries.reserve(pairs.size());
  e.keys.reserve(pairs.size());
  for (const auto & [q, k] : pairs) {
    e.offsets[static_cast<std::size_t>(q) + 1] += 1;
    e.queries.push_back(q);
    e.keys.push_back(k);
  }
  for (std::size_t i = 1; i < e.offsets.size(); ++i) e.offsets[i] += e.offsets[i - 1];
  return e;
}

/// Edges from every query anchor to all key anchors within `radius` meters
/// (inclusive). Distances are evaluated in double precision so the gating
/// decision never depends on the model's compute precision. When query and
/// key arrays alias the same elements, pass exclude_same_index to drop the
/// self edge.
inline EdgeList radius_edges(
  const std::vector<Anchor> & queries, const std::vector<Anchor> & keys, double radius,
  bool exclude_same_index = false) {
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  const double r2 = radius * radius;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (std::size_t k = 0; k < keys.size(); ++k) {
      if (exclude_same_index && q == k) continue;
      const double dx = keys[k].x - queries[q].x;
      const double dy = keys[k].y - queries[q].y;
      if (dx * dx + dy * dy <= r2) {
        pairs.emplace_back(static_cast<std::int64_t>(q), static_cast<std::int64_t>(k));
      }
    }
  }
  return make_edges(static_cast<std::int64_t>(queries.size()), pairs);
}

/// Causal edges within one sequence: step i attends to steps j with
/// j < i and i - j <= span. Indices are local to the sequence; invalid
/// entries take part in no edge.
inline EdgeList causal_edges(const std::vector<bool> & valid, std::int64_t span) {
  const auto n = static_cast<std::int64_t>(valid.size());
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  for (std::int64_t i = 0; i < n; ++i) {
    if (!valid[static_cast<std::size_t>(i)]) continue;
    for (std::int64_t j = std::max<std::int64_t>(0, i - span); j < i; ++j) {
      if (valid[static_cast<std::size_t>(j)]) pairs.emplace_back(i, j);
    }
  }
  return make_edges(n, pairs);
}

/// Raw descriptor features for every edge, [n_edges, 6]. Pure double; used
/// for stages whose anchors are fixed scene geometry.
inline Tensor<double> edge_descriptor_features(
  const std::vector<Anchor> & queries, const std::vector<Anchor> & keys, const EdgeList & edges,
  double dt) {
  const std::int64_t ne = edges.n_edges();
  Tensor<double> out = Tensor<double>::zeros({ne, kDescriptorDim});
  for (std::int64_t e = 0; e < ne; ++e) {
    const auto f = raw_descriptor_features(
      queries[static_cast<std::size_t>(edges.queries[static_cast<std::size_t>(e)])],
      keys[static_cast<std::size_t>(edges.keys[static_cast<std::size_t>(e)])], dt);
    for (int j = 0; j < kDescriptorDim; ++j) out.at(e, j) = f[static_cast<std::size_t>(j)];
  }
  return out;
}

/// Smallest |distance - radius| over all query/key pairs. Tests use this to
/// certify that sampled scenes keep a safety margin around gating boundaries.
inline double radius_boundary_margin(
  const std::vector<Anchor> & queries, const std::vector<Anchor> & keys, double radius) {
  double margin = 1e300;
  for (const auto & q : queries) {
    for (const auto & k : keys) {
      const double d = std::hypot(k.x - q.x, k.y - q.y);
      const double m = std::abs(d - radius);
      if (m < margin) margin = m;
    }
  }
  return margin;
}

}  // namespace futurenet

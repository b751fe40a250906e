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
#include <vector>

#include "futurenet/core/tensor.hpp"
#include "futurenet/scene/scene.hpp"

namespace futurenet {

/// Ground-truth future positions in dense form, aligned with the scene's
/// agent order. Agents without a future entry carry all-invalid rows.
struct FutureTargets {
  Tensor<double> pos;    // [N_A, T, 2]
  Tensor<double> valid;  // [N_A, T], 0 or 1
  std::vector<bool> has_any;
  std::int64_t n_agents = 0;
  std::int64_t horizon = 0;
};

inline FutureTargets make_future_targets(const Scene & scene) {
  FutureTargets gt;
  gt.n_agents = static_cast<std::int64_t>(scene.agents.size());
  gt.horizon = scene.future_len();
  gt.pos = Tensor<double>::zeros({gt.n_agents, std::max<std::int64_t>(gt.horizon, 1), 2});
  gt.valid = Tensor<double>::zeros({gt.n_agents, std::max<std::int64_t>(gt.horizon, 1)});
  gt.has_any.assign(static_cast<std::size_t>(gt.n_agents), false);
  for (std::int64_t a = 0; a < gt.n_agents; ++a) {
    const std::int64_t id = scene.agents[static_cast<std::size_t>(a)].agent_id;
    for (const auto & fut : scene.futures) {
      if (fut.agent_id != id) continue;
      for (std::int64_t t = 0; t < gt.horizon; ++t) {
        const AgentState & st = fut.states[static_cast<std::size_t>(t)];
        if (!st.valid) continue;
        gt.pos.at(a, t, 0) = st.pose.x;
        gt.pos.at(a, t, 1) = st.pose.y;
        gt.valid.at(a, t) = 1.0;
        gt.has_any[static_cast<std::size_t>(a)] = true;
      }
      break;
    }
  }
  return gt;
}

}  // namespace futurenet

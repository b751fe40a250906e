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
#include <vector>

#include "futurenet/core/tensor.hpp"

namespace futurenet {

/// Multimodal forecast for one scene. K modes per agent, each a Laplace
/// density per step and coordinate: means [N_A, K, T, 2], positive scales
/// [N_A, K, T, 2], and per-agent mode probabilities [N_A, K] summing to 1.
struct TrajectoryForecast {
  Tensor<double> means;
  Tensor<double> scales;
  Tensor<double> probs;

  std::int64_t n_agents() const { return means.rank() == 4 ? means.dim(0) : 0; }
  std::int64_t n_modes() const { return means.rank() == 4 ? means.dim(1) : 0; }
  std::int64_t horizon() const { return means.rank() == 4 ? means.dim(2) : 0; }
};

/// Predicted lane occupancy per keyframe: values [N_kf, N_m] in [0, 1],
/// row kf aligned with keyframe_steps[kf] (1-indexed future steps).
struct LaneOccupancyField {
  Tensor<double> values;
  std::vector<std::int64_t> keyframe_steps;

  bool enabled() const { return !keyframe_steps.empty(); }
  std::int64_t n_keyframes() const { return values.rank() == 2 ? values.dim(0) : 0; }
  std::int64_t n_points() const { return values.rank() == 2 ? values.dim(1) : 0; }
};

}  // namespace futurenet

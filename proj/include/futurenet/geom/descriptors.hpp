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

#include <array>
#include <cmath>
#include <cstdint>

#include "futurenet/scene/scene.hpp"

namespace futurenet {

/// Reference frame attached to a scene element: a pose plus an optional
/// discrete time step. step < 0 marks a timeless element (map geometry);
/// time gaps involving a timeless element are zero.
struct Anchor {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  std::int64_t step = -1;
};

inline Anchor anchor_of(const Pose2 & pose, std::int64_t step = -1) {
  return Anchor{pose.x, pose.y, pose.heading, step};
}

/// Pairwise relation between anchors, expressed in the frame of `i`:
/// distance, bearing of j as seen from i, heading of j relative to i,
/// and their step difference. Invariant under global rigid transforms.
struct RelativeDescriptor {
  double distance = 0.0;
  double direction = 0.0;
  double rel_orientation = 0.0;
  double time_gap = 0.0;
};

inline RelativeDescriptor relative_descriptor(const Anchor & i, const Anchor & j) {
  const double dx = j.x - i.x;
  const double dy = j.y - i.y;
  const double ci = std::cos(i.heading);
  const double si = std::sin(i.heading);
  const double u = ci * dx + si * dy;
  const double v = -si * dx + ci * dy;
  RelativeDescriptor d;
  d.distance = std::sqrt(u * u + v * v);
  d.direction = d.distance < 1e-12 ? 0.0 : std::atan2(v, u);
  d.rel_orientation = wrap_angle(j.heading - i.heading);
  d.time_gap = (i.step >= 0 && j.step >= 0) ? static_cast<double>(j.step - i.step) : 0.0;
  return d;
}

/// Smooth encoding of the descriptor used as network input. Angles enter as
/// cosine/sine pairs so the features are continuous everywhere; the time gap
/// is expressed in seconds. Order:
///   [distance, cos dir, sin dir, cos rel_orientation, sin rel_orientation, gap_seconds]
/// Degenerate pairs (distance below 1e-12) use the neutral bearing (1, 0).
inline constexpr int kDescriptorDim = 6;

inline std::array<double, kDescriptorDim> raw_descriptor_features(
  const Anchor & i, const Anchor & j, double dt) {
  const double dx = j.x - i.x;
  const double dy = j.y - i.y;
  const double ci = std::cos(i.heading);
  const double si = std::sin(i.heading);
  const double cj = std::cos(j.heading);
  const double sj = std::sin(j.heading);
  const double u = ci * dx + si * dy;
  const double v = -si * dx + ci * dy;
  const double dist = std::sqrt(u * u + v * v);
  std::array<double, kDescriptorDim> f{};
  if (dist < 1e-12) {
    f[0] = 0.0;
    f[1] = 1.0;
    f[2] = 0.0;
  } else {
    f[0] = dist;
    f[1] = u / dist;
    f[2] = v / dist;
  }
  f[3] = cj * ci + sj * si;
  f[4] = sj * ci - cj * si;
  f[5] = (i.step >= 0 && j.step >= 0) ? static_cast<double>(j.step - i.step) * dt : 0.0;
  return f;
}

}  // namespace futurenet

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
#include <cstdint>
#include <vector>

#include "futurenet/core/graph.hpp"
#include "futurenet/geom/descriptors.hpp"
#include "futurenet/geom/neighborhoods.hpp"

namespace futurenet {

// Differentiable scene geometry. All geometric arithmetic runs in double on
// mirror tensors regardless of the compute precision T, then casts into the
// graph. This keeps pairwise descriptors and gating decisions independent of
// T, so rigidly transformed scenes produce bit-identical network inputs once
// rounded to T. The backward closures evaluate the same double Jacobians, so
// at T = double the analytic gradients match finite differences exactly.

/// Differentiable pose set: graph value [n, 4] with columns (x, y, cos h,
/// sin h), a double mirror of the same numbers, and constant step stamps.
template <typename T>
struct AnchorSet {
  Var var;
  Tensor<double> world;  // [n, 4]
  std::vector<std::int64_t> steps;

  std::int64_t size() const { return world.shape()[0]; }

  /// Snapshot for edge building and descriptor math.
  std::vector<Anchor> anchors() const {
    std::vector<Anchor> out;
    const std::int64_t n = size();
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      Anchor a;
      a.x = world.at(i, 0);
      a.y = world.at(i, 1);
      a.heading = std::atan2(world.at(i, 3), world.at(i, 2));
      a.step = steps[static_cast<std::size_t>(i)];
      out.push_back(a);
    }
    return out;
  }
};

/// Non-trainable anchors (map geometry, observed history poses).
template <typename T>
AnchorSet<T> constant_anchors(Graph<T> & g, const std::vector<Anchor> & anchors) {
  const auto n = static_cast<std::int64_t>(anchors.size());
  Tensor<double> world = Tensor<double>::zeros({n, 4});
  std::vector<std::int64_t> steps(anchors.size());
  for (std::int64_t i = 0; i < n; ++i) {
    const Anchor & a = anchors[static_cast<std::size_t>(i)];
    world.at(i, 0) = a.x;
    world.at(i, 1) = a.y;
    world.at(i, 2) = std::cos(a.heading);
    world.at(i, 3) = std::sin(a.heading);
    steps[static_cast<std::size_t>(i)] = a.step;
  }
  AnchorSet<T> set;
  set.var = g.constant(world.template cast<T>());
  set.world = std::move(world);
  set.steps = std::move(steps);
  return set;
}

/// Raw pairwise descriptor features for every edge, [n_edges, 6]:
/// distance, bearing cos/sin, relative orientation cos/sin, time gap in
/// seconds. Differentiable in both anchor sets.
template <typename T>
Var relative_descriptors(
  Graph<T> & g, const AnchorSet<T> & qa, const AnchorSet<T> & ka, const EdgeList & edges,
  double dt) {
  const std::int64_t ne = edges.n_edges();
  Tensor<double> raw = Tensor<double>::zeros({ne, kDescriptorDim});
  for (std::int64_t e = 0; e < ne; ++e) {
    const std::int64_t qi = edges.queries[static_cast<std::size_t>(e)];
    const std::int64_t ki = edges.keys[static_cast<std::size_t>(e)];
    const double xi = qa.world.at(qi, 0), yi = qa.world.at(qi, 1);
    const double ci = qa.world.at(qi, 2), si = qa.world.at(qi, 3);
    const double xj = ka.world.at(ki, 0), yj = ka.world.at(ki, 1);
    const double cj = ka.world.at(ki, 2), sj = ka.world.at(ki, 3);
    const double dx = xj - xi, dy = yj - yi;
    const double u = ci * dx + si * dy;
    const double v = -si * dx + ci * dy;
    const double dist = std::sqrt(u * u + v * v);
    if (dist < 1e-12) {
      raw.at(e, 0) = 0.0;
      raw.at(e, 1) = 1.0;
      raw.at(e, 2) = 0.0;
    } else {
      raw.at(e, 0) = dist;
      raw.at(e, 1) = u / dist;
      raw.at(e, 2) = v / dist;
    }
    raw.at(e, 3) = cj * ci + sj * si;
    raw.at(e, 4) = sj * ci - cj * si;
    const std::int64_t sq = qa.steps[static_cast<std::size_t>(qi)];
    const std::int64_t sk = ka.steps[static_cast<std::size_t>(ki)];
    raw.at(e, 5) = (sq >= 0 && sk >= 0) ? static_cast<double>(sk - sq) * dt : 0.0;
  }

  const Var qv = qa.var;
  const Var kv = ka.var;
  Tensor<double> qw = qa.world;
  Tensor<double> kw = ka.world;
  std::vector<std::int64_t> eq = edges.queries;
  std::vector<std::int64_t> ek = edges.keys;
  return g.make_op(
    raw.template cast<T>(),
    [qv, kv, qw = std::move(qw), kw = std::move(kw), eq = std::move(eq), ek = std::move(ek),
     ne](Graph<T> & gr, std::int64_t self) {
      const Tensor<T> & go = gr.grad(Var{self});
      Tensor<T> & gq = gr.grad(qv);
      Tensor<T> & gk = gr.grad(kv);
      for (std::int64_t e = 0; e < ne; ++e) {
        const std::int64_t qi = eq[static_cast<std::size_t>(e)];
        const std::int64_t ki = ek[static_cast<std::size_t>(e)];
        const double xi = qw.at(qi, 0), yi = qw.at(qi, 1);
        const double ci = qw.at(qi, 2), si = qw.at(qi, 3);
        const double xj = kw.at(ki, 0), yj = kw.at(ki, 1);
        const double cj = kw.at(ki, 2), sj = kw.at(ki, 3);
        const double dx = xj - xi, dy = yj - yi;
        const double u = ci * dx + si * dy;
        const double v = -si * dx + ci * dy;
        const double dist = std::sqrt(u * u + v * v);

        const double g0 = static_cast<double>(go.at(e, 0));
        const double g1 = static_cast<double>(go.at(e, 1));
        const double g2 = static_cast<double>(go.at(e, 2));
        const double g3 = static_cast<double>(go.at(e, 3));
        const double g4 = static_cast<double>(go.at(e, 4));

        double du = 0.0, dv = 0.0;
        if (dist >= 1e-12) {
          const double inv = 1.0 / dist;
          const double inv3 = inv * inv * inv;
          // d dist       = (u du + v dv) / dist
          // d (u / dist) = (v^2 du - u v dv) / dist^3
          // d (v / dist) = (u^2 dv - u v du) / dist^3
          du = g0 * u * inv + g1 * v * v * inv3 - g2 * u * v * inv3;
          dv = g0 * v * inv - g1 * u * v * inv3 + g2 * u * u * inv3;
        }
        const double ddx = ci * du - si * dv;
        const double ddy = si * du + ci * dv;
        gq.at(qi, 0) += static_cast<T>(-ddx);
        gq.at(qi, 1) += static_cast<T>(-ddy);
        gk.at(ki, 0) += static_cast<T>(ddx);
        gk.at(ki, 1) += static_cast<T>(ddy);
        gq.at(qi, 2) += static_cast<T>(du * dx + dv * dy + g3 * cj + g4 * sj);
        gq.at(qi, 3) += static_cast<T>(du * dy - dv * dx + g3 * sj - g4 * cj);
        gk.at(ki, 2) += static_cast<T>(g3 * ci - g4 * si);
        gk.at(ki, 3) += static_cast<T>(g3 * si + g4 * ci);
      }
    });
}

/// Waypoints with a double mirror of their world coordinates. The graph value
/// is [n, 2 * t] with (x, y) pairs flattened along the row.
template <typename T>
struct WaypointsVar {
  Var var;
  Tensor<double> world;  // [n, 2 * t]
  std::int64_t n_steps = 0;
};

/// Map local waypoint offsets (in each anchor's frame) to world coordinates:
/// world = anchor + R(anchor heading) * local. Differentiable in both the
/// offsets and the anchors.
template <typename T>
WaypointsVar<T> compose_waypoints(Graph<T> & g, const AnchorSet<T> & anchors, Var local) {
  const Tensor<T> & vl = g.value(local);
  const std::int64_t n = vl.shape()[0];
  const std::int64_t w = vl.shape()[1];
  if (n != anchors.size() || w % 2 != 0) throw NumericError("compose_waypoints shape mismatch");
  const std::int64_t t_steps = w / 2;

  Tensor<double> world = Tensor<double>::zeros({n, w});
  for (std::int64_t i = 0; i < n; ++i) {
    const double ax = anchors.world.at(i, 0), ay = anchors.world.at(i, 1);
    const double c = anchors.world.at(i, 2), s = anchors.world.at(i, 3);
    for (std::int64_t t = 0; t < t_steps; ++t) {
      const double lx = static_cast<double>(vl.at(i, 2 * t));
      const double ly = static_cast<double>(vl.at(i, 2 * t + 1));
      world.at(i, 2 * t) = ax + c * lx - s * ly;
      world.at(i, 2 * t + 1) = ay + s * lx + c * ly;
    }
  }

  const Var av = anchors.var;
  Tensor<double> aw = anchors.world;
  Tensor<double> lw = Tensor<double>::zeros({n, w});
  for (std::int64_t i = 0; i < n * w; ++i) lw.data()[i] = static_cast<double>(vl.data()[i]);

  WaypointsVar<T> out;
  out.world = world;
  out.n_steps = t_steps;
  out.var = g.make_op(
    world.template cast<T>(),
    [local, av, aw = std::move(aw), lw = std::move(lw), n, t_steps](
      Graph<T> & gr, std::int64_t self) {
      const Tensor<T> & go = gr.grad(Var{self});
      Tensor<T> & gl = gr.grad(local);
      Tensor<T> & ga = gr.grad(av);
      for (std::int64_t i = 0; i < n; ++i) {
        const double c = aw.at(i, 2), s = aw.at(i, 3);
        double sx = 0.0, sy = 0.0, sc = 0.0, ss = 0.0;
        for (std::int64_t t = 0; t < t_steps; ++t) {
          const double gx = static_cast<double>(go.at(i, 2 * t));
          const double gy = static_cast<double>(go.at(i, 2 * t + 1));
          const double lx = lw.at(i, 2 * t), ly = lw.at(i, 2 * t + 1);
          gl.at(i, 2 * t) += static_cast<T>(c * gx + s * gy);
          gl.at(i, 2 * t + 1) += static_cast<T>(-s * gx + c * gy);
          sx += gx;
          sy += gy;
          sc += lx * gx + ly * gy;
          ss += -ly * gx + lx * gy;
        }
        ga.at(i, 0) += static_cast<T>(sx);
        ga.at(i, 1) += static_cast<T>(sy);
        ga.at(i, 2) += static_cast<T>(sc);
        ga.at(i, 3) += static_cast<T>(ss);
      }
    });
  return out;
}

/// Add per-step residual offsets, rotated into each anchor's heading frame,
/// on top of existing world waypoints: out = base + R(anchor heading) * off.
/// No translation term, so a zero offset head reproduces base exactly.
template <typename T>
WaypointsVar<T> offset_waypoints(
  Graph<T> & g, const AnchorSet<T> & anchors, const WaypointsVar<T> & base, Var offsets) {
  const Tensor<T> & vo = g.value(offsets);
  const std::int64_t n = vo.shape()[0];
  const std::int64_t w = vo.shape()[1];
  if (n != anchors.size() || base.world.shape()[0] != n || base.world.shape()[1] != w) {
    throw NumericError("offset_waypoints shape mismatch");
  }
  const std::int64_t t_steps = w / 2;

  Tensor<double> world = Tensor<double>::zeros({n, w});
  Tensor<double> ow = Tensor<double>::zeros({n, w});
  for (std::int64_t i = 0; i < n * w; ++i) ow.data()[i] = static_cast<double>(vo.data()[i]);
  for (std::int64_t i = 0; i < n; ++i) {
    const double c = anchors.world.at(i, 2), s = anchors.world.at(i, 3);
    for (std::int64_t t = 0; t < t_steps; ++t) {
      const double ox = ow.at(i, 2 * t), oy = ow.at(i, 2 * t + 1);
      world.at(i, 2 * t) = base.world.at(i, 2 * t) + c * ox - s * oy;
      world.at(i, 2 * t + 1) = base.world.at(i, 2 * t + 1) + s * ox + c * oy;
    }
  }

  const Var av = anchors.var;
  const Var bv = base.var;
  Tensor<double> aw = anchors.world;

  WaypointsVar<T> out;
  out.world = world;
  out.n_steps = t_steps;
  out.var = g.make_op(
    world.template cast<T>(),
    [offsets, av, bv, aw = std::move(aw), ow = std::move(ow), n, t_steps](
      Graph<T> & gr, std::int64_t self) {
      const Tensor<T> & go = gr.grad(Var{self});
      Tensor<T> & goff = gr.grad(offsets);
      Tensor<T> & gb = gr.grad(bv);
      Tensor<T> & ga = gr.grad(av);
      for (std::int64_t i = 0; i < n; ++i) {
        const double c = aw.at(i, 2), s = aw.at(i, 3);
        double sc = 0.0, ss = 0.0;
        for (std::int64_t t = 0; t < t_steps; ++t) {
          const double gx = static_cast<double>(go.at(i, 2 * t));
          const double gy = static_cast<double>(go.at(i, 2 * t + 1));
          gb.at(i, 2 * t) += static_cast<T>(gx);
          gb.at(i, 2 * t + 1) += static_cast<T>(gy);
          goff.at(i, 2 * t) += static_cast<T>(c * gx + s * gy);
          goff.at(i, 2 * t + 1) += static_cast<T>(-s * gx + c * gy);
          const double ox = ow.at(i, 2 * t), oy = ow.at(i, 2 * t + 1);
          sc += ox * gx + oy * gy;
          ss += -oy * gx + ox * gy;
        }
        ga.at(i, 2) += static_cast<T>(sc);
        ga.at(i, 3) += static_cast<T>(ss);
      }
    });
  return out;
}

/// Express world waypoints in each anchor's local frame:
/// local = R(anchor heading)^T * (world - anchor position).
template <typename T>
Var waypoints_to_anchor_frame(
  Graph<T> & g, const AnchorSet<T> & anchors, const WaypointsVar<T> & wp) {
  const std::int64_t n = wp.world.shape()[0];
  const std::int64_t w = wp.world.shape()[1];
  if (n != anchors.size()) throw NumericError("waypoints_to_anchor_frame shape mismatch");
  const std::int64_t t_steps = w / 2;

  Tensor<double> local = Tensor<double>::zeros({n, w});
  for (std::int64_t i = 0; i < n; ++i) {
    const double ax = anchors.world.at(i, 0), ay = anchors.world.at(i, 1);
    const double c = anchors.world.at(i, 2), s = anchors.world.at(i, 3);
    for (std::int64_t t = 0; t < t_steps; ++t) {
      const double dx = wp.world.at(i, 2 * t) - ax;
      const double dy = wp.world.at(i, 2 * t + 1) - ay;
      local.at(i, 2 * t) = c * dx + s * dy;
      local.at(i, 2 * t + 1) = -s * dx + c * dy;
    }
  }

  const Var av = anchors.var;
  const Var wv = wp.var;
  Tensor<double> aw = anchors.world;
  Tensor<double> ww = wp.world;
  return g.make_op(
    local.template cast<T>(),
    [av, wv, aw = std::move(aw), ww = std::move(ww), n, t_steps](
      Graph<T> & gr, std::int64_t self) {
      const Tensor<T> & go = gr.grad(Var{self});
      Tensor<T> & ga = gr.grad(av);
      Tensor<T> & gw = gr.grad(wv);
      for (std::int64_t i = 0; i < n; ++i) {
        const double ax = aw.at(i, 0), ay = aw.at(i, 1);
        const double c = aw.at(i, 2), s = aw.at(i, 3);
        double sx = 0.0, sy = 0.0, sc = 0.0, ss = 0.0;
        for (std::int64_t t = 0; t < t_steps; ++t) {
          const double glx = static_cast<double>(go.at(i, 2 * t));
          const double gly = static_cast<double>(go.at(i, 2 * t + 1));
          const double dx = ww.at(i, 2 * t) - ax;
          const double dy = ww.at(i, 2 * t + 1) - ay;
          const double dwx = c * glx - s * gly;
          const double dwy = s * glx + c * gly;
          gw.at(i, 2 * t) += static_cast<T>(dwx);
          gw.at(i, 2 * t + 1) += static_cast<T>(dwy);
          sx -= dwx;
          sy -= dwy;
          sc += dx * glx + dy * gly;
          ss += dy * glx - dx * gly;
        }
        ga.at(i, 0) += static_cast<T>(sx);
        ga.at(i, 1) += static_cast<T>(sy);
        ga.at(i, 2) += static_cast<T>(sc);
        ga.at(i, 3) += static_cast<T>(ss);
      }
    });
}

/// Move each anchor to its trajectory segment endpoint. The new heading is
/// the bearing of the last waypoint step; when that step is shorter than
/// 1e-6 m the previous anchor heading carries over (with gradient). Step
/// stamps advance by the segment length.
template <typename T>
AnchorSet<T> reanchor(Graph<T> & g, const AnchorSet<T> & prev, const WaypointsVar<T> & wp) {
  const std::int64_t n = prev.size();
  const std::int64_t t_steps = wp.n_steps;
  if (wp.world.shape()[0] != n || t_steps < 1) throw NumericError("reanchor shape mismatch");

  Tensor<double> world = Tensor<double>::zeros({n, 4});
  std::vector<char> fallback(static_cast<std::size_t>(n), 0);
  for (std::int64_t i = 0; i < n; ++i) {
    const double ex = wp.world.at(i, 2 * (t_steps - 1));
    const double ey = wp.world.at(i, 2 * (t_steps - 1) + 1);
    double px, py;
    if (t_steps >= 2) {
      px = wp.world.at(i, 2 * (t_steps - 2));
      py = wp.world.at(i, 2 * (t_steps - 2) + 1);
    } else {
      px = prev.world.at(i, 0);
      py = prev.world.at(i, 1);
    }
    const double ux = ex - px, uy = ey - py;
    const double norm = std::sqrt(ux * ux + uy * uy);
    world.at(i, 0) = ex;
    world.at(i, 1) = ey;
    if (norm < 1e-6) {
      world.at(i, 2) = prev.world.at(i, 2);
      world.at(i, 3) = prev.world.at(i, 3);
      fallback[static_cast<std::size_t>(i)] = 1;
    } else {
      world.at(i, 2) = ux / norm;
      world.at(i, 3) = uy / norm;
    }
  }

  AnchorSet<T> out;
  out.world = world;
  out.steps.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t s = prev.steps[static_cast<std::size_t>(i)];
    out.steps[static_cast<std::size_t>(i)] = s >= 0 ? s + t_steps : s;
  }

  const Var pv = prev.var;
  const Var wv = wp.var;
  Tensor<double> pw = prev.world;
  Tensor<double> ww = wp.world;
  out.var = g.make_op(
    world.template cast<T>(),
    [pv, wv, pw = std::move(pw), ww = std::move(ww), fallback = std::move(fallback), n,
     t_steps](Graph<T> & gr, std::int64_t self) {
      const Tensor<T> & go = gr.grad(Var{self});
      Tensor<T> & gp = gr.grad(pv);
      Tensor<T> & gw = gr.grad(wv);
      for (std::int64_t i = 0; i < n; ++i) {
        const double g0 = static_cast<double>(go.at(i, 0));
        const double g1 = static_cast<double>(go.at(i, 1));
        const double gc = static_cast<double>(go.at(i, 2));
        const double gs = static_cast<double>(go.at(i, 3));
        gw.at(i, 2 * (t_steps - 1)) += static_cast<T>(g0);
        gw.at(i, 2 * (t_steps - 1) + 1) += static_cast<T>(g1);
        if (fallback[static_cast<std::size_t>(i)]) {
          gp.at(i, 2) += static_cast<T>(gc);
          gp.at(i, 3) += static_cast<T>(gs);
          continue;
        }
        const double ex = ww.at(i, 2 * (t_steps - 1));
        const double ey = ww.at(i, 2 * (t_steps - 1) + 1);
        double px, py;
        if (t_steps >= 2) {
          px = ww.at(i, 2 * (t_steps - 2));
          py = ww.at(i, 2 * (t_steps - 2) + 1);
        } else {
          px = pw.at(i, 0);
          py = pw.at(i, 1);
        }
        const double ux = ex - px, uy = ey - py;
        const double norm = std::sqrt(ux * ux + uy * uy);
        const double inv3 = 1.0 / (norm * norm * norm);
        // d (ux/norm) = (uy^2 dux - ux uy duy) / norm^3, and symmetrically.
        const double dux = (gc * uy * uy - gs * ux * uy) * inv3;
        const double duy = (-gc * ux * uy + gs * ux * ux) * inv3;
        gw.at(i, 2 * (t_steps - 1)) += static_cast<T>(dux);
        gw.at(i, 2 * (t_steps - 1) + 1) += static_cast<T>(duy);
        if (t_steps >= 2) {
          gw.at(i, 2 * (t_steps - 2)) += static_cast<T>(-dux);
          gw.at(i, 2 * (t_steps - 2) + 1) += static_cast<T>(-duy);
        } else {
          gp.at(i, 0) += static_cast<T>(-dux);
          gp.at(i, 1) += static_cast<T>(-duy);
        }
      }
    });
  return out;
}

}  // namespace futurenet

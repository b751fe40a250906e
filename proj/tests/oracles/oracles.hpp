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

// Brute-force reference implementations used to cross-check production code.
// Everything here works on plain std containers and follows the defining
// formulas as literally as possible; nothing is shared with the library
// under test. Instances are assumed small (a handful of agents and modes,
// at most a few hundred points).

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace oracle {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double dist(const Vec2 & a, const Vec2 & b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Ground truth for one agent: positions and a validity flag per future step.
struct Track {
  std::vector<Vec2> pos;
  std::vector<int> valid;

  bool any_valid() const {
    for (int v : valid) {
      if (v != 0) return true;
    }
    return false;
  }
};

/// Forecast for a whole scene: modes[a][k][t] positions, probs[a][k].
struct Forecast {
  std::vector<std::vector<std::vector<Vec2>>> modes;
  std::vector<std::vector<double>> probs;

  std::int64_t n_agents() const { return static_cast<std::int64_t>(modes.size()); }
  std::int64_t n_modes() const { return modes.empty() ? 0 : static_cast<std::int64_t>(modes[0].size()); }
  std::int64_t horizon() const {
    return modes.empty() || modes[0].empty() ? 0 : static_cast<std::int64_t>(modes[0][0].size());
  }
};

// ---------------------------------------------------------------------------
// Occupancy labels and rendering: all-pairs distance scans.

/// tracks[a] holds future positions; keyframe steps are 1-indexed into them.
inline std::vector<std::vector<int>> lof_labels(
  const std::vector<Vec2> & points, const std::vector<Track> & tracks, double threshold,
  const std::vector<std::int64_t> & keyframe_steps) {
  std::vector<std::vector<int>> out;
  for (std::int64_t step : keyframe_steps) {
    std::vector<int> row(points.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      for (const Track & tr : tracks) {
        const auto t = static_cast<std::size_t>(step - 1);
        if (tr.valid[t] == 0) continue;
        if (dist(points[i], tr.pos[t]) <= threshold) {
          row[i] = 1;
          break;
        }
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

/// Occupancy rendered from forecast modes: union over agents and modes.
inline std::vector<std::vector<int>> render_lof(
  const std::vector<Vec2> & points, const Forecast & f, double threshold,
  const std::vector<std::int64_t> & keyframe_steps) {
  std::vector<std::vector<int>> out;
  for (std::int64_t step : keyframe_steps) {
    std::vector<int> row(points.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      bool hit = false;
      for (const auto & agent_modes : f.modes) {
        for (const auto & mode : agent_modes) {
          if (dist(points[i], mode[static_cast<std::size_t>(step - 1)]) <= threshold) hit = true;
        }
      }
      row[i] = hit ? 1 : 0;
    }
    out.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trajectory metrics: exhaustive enumeration over mode subsets.

/// Indices of the k most probable modes of agent a, picked one at a time by
/// repeated maximum scans; equal probabilities prefer the lower index.
inline std::vector<std::int64_t> top_k_modes(const std::vector<double> & probs, std::int64_t k) {
  std::vector<bool> taken(probs.size(), false);
  std::vector<std::int64_t> out;
  for (std::int64_t pick = 0; pick < k; ++pick) {
    std::int64_t best = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (taken[i]) continue;
      if (best < 0 || probs[i] > probs[static_cast<std::size_t>(best)]) {
        best = static_cast<std::int64_t>(i);
      }
    }
    taken[static_cast<std::size_t>(best)] = true;
    out.push_back(best);
  }
  return out;
}

inline double endpoint_error(const Forecast & f, const Track & gt, std::int64_t a, std::int64_t k) {
  const std::size_t last = gt.pos.size() - 1;
  return dist(f.modes[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)][last], gt.pos[last]);
}

inline std::optional<double> mode_ade(
  const Forecast & f, const Track & gt, std::int64_t a, std::int64_t k) {
  double sum = 0.0;
  std::int64_t n = 0;
  for (std::size_t t = 0; t < gt.pos.size(); ++t) {
    if (gt.valid[t] == 0) continue;
    sum += dist(f.modes[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)][t], gt.pos[t]);
    n += 1;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

inline double min_ade(const Forecast & f, const std::vector<Track> & gt, std::int64_t k) {
  double sum = 0.0;
  std::int64_t n = 0;
  for (std::int64_t a = 0; a < f.n_agents(); ++a) {
    std::optional<double> best;
    for (std::int64_t mode : top_k_modes(f.probs[static_cast<std::size_t>(a)], k)) {
      const auto ade = mode_ade(f, gt[static_cast<std::size_t>(a)], a, mode);
      if (ade && (!best || *ade < *best)) best = ade;
    }
    if (best) {
      sum += *best;
      n += 1;
    }
  }
  return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

inline bool final_valid(const Track & gt) { return !gt.valid.empty() && gt.valid.back() != 0; }

/// Best endpoint among the agent's top-k modes; earlier-picked modes win ties.
inline std::pair<double, std::int64_t> best_endpoint(
  const Forecast & f, const Track & gt, std::int64_t a, std::int64_t k) {
  double best = 0.0;
  std::int64_t best_mode = -1;
  for (std::int64_t mode : top_k_modes(f.probs[static_cast<std::size_t>(a)], k)) {
    const double e = endpoint_error(f, gt, a, mode);
    if (best_mode < 0 || e < best) {
      best = e;
      best_mode = mode;
    }
  }
  return {best, best_mode};
}

inline double min_fde(const Forecast & f, const std::vector<Track> & gt, std::int64_t k) {
  double sum = 0.0;
  std::int64_t n = 0;
  for (std::int64_t a = 0; a < f.n_agents(); ++a) {
    if (!final_valid(gt[static_cast<std::size_t>(a)])) continue;
    sum += best_endpoint(f, gt[static_cast<std::size_t>(a)], a, k).first;
    n += 1;
  }
  return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

inline double brier_min_fde(const Forecast & f, const std::vector<Track> & gt, std::int64_t k) {
  double sum = 0.0;
  std::int64_t n = 0;
  for (std::int64_t a = 0; a < f.n_agents(); ++a) {
    if (!final_valid(gt[static_cast<std::size_t>(a)])) continue;
    const auto [err, mode] = best_endpoint(f, gt[static_cast<std::size_t>(a)], a, k);
    const double p = f.probs[static_cast<std::size_t>(a)][static_cast<std::size_t>(mode)];
    sum += err + (1.0 - p) * (1.0 - p);
    n += 1;
  }
  return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

inline double miss_rate(const Forecast & f, const std::vector<Track> & gt, std::int64_t k) {
  double sum = 0.0;
  std::int64_t n = 0;
  for (std::int64_t a = 0; a < f.n_agents(); ++a) {
    if (!final_valid(gt[static_cast<std::size_t>(a)])) continue;
    sum += best_endpoint(f, gt[static_cast<std::size_t>(a)], a, k).first > 2.0 ? 1.0 : 0.0;
    n += 1;
  }
  return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

/// Scene-level joint-future aggregates: world k pairs the k-th mode of every
/// agent; worlds are scored as units and the endpoint-best world wins.
struct MultiWorld {
  double avg_min_fde = 0.0;
  double avg_min_ade = 0.0;
  double avg_brier_min_fde = 0.0;
  double actor_mr = 0.0;
  std::int64_t best_world = -1;
  bool defined = false;
};

inline MultiWorld multi_world(const Forecast & f, const std::vector<Track> & gt) {
  MultiWorld m;
  std::vector<std::int64_t> fde_agents, ade_agents;
  for (std::int64_t a = 0; a < f.n_agents(); ++a) {
    if (final_valid(gt[static_cast<std::size_t>(a)])) fde_agents.push_back(a);
    if (gt[static_cast<std::size_t>(a)].any_valid()) ade_agents.push_back(a);
  }
  if (fde_agents.empty()) return m;
  m.defined = true;

  const std::int64_t k_modes = f.n_modes();
  for (std::int64_t k = 0; k < k_modes; ++k) {
    double fde = 0.0;
    for (std::int64_t a : fde_agents) fde += endpoint_error(f, gt[static_cast<std::size_t>(a)], a, k);
    fde /= static_cast<double>(fde_agents.size());
    if (m.best_world < 0 || fde < m.avg_min_fde) {
      m.avg_min_fde = fde;
      m.best_world = k;
    }
    if (!ade_agents.empty()) {
      double ade = 0.0;
      for (std::int64_t a : ade_agents) ade += *mode_ade(f, gt[static_cast<std::size_t>(a)], a, k);
      ade /= static_cast<double>(ade_agents.size());
      if (k == 0 || ade < m.avg_min_ade) m.avg_min_ade = ade;
    }
  }
  const double w = 1.0 / static_cast<double>(k_modes);
  m.avg_brier_min_fde = m.avg_min_fde + (1.0 - w) * (1.0 - w);

  double misses = 0.0;
  for (std::int64_t a : fde_agents) {
    if (endpoint_error(f, gt[static_cast<std::size_t>(a)], a, m.best_world) > 2.0) misses += 1.0;
  }
  m.actor_mr = misses / static_cast<double>(fde_agents.size());
  return m;
}

// ---------------------------------------------------------------------------
// Occupancy field metrics: direct formula evaluation.

inline double lof_iou(
  const std::vector<double> & predicted, const std::vector<int> & labels, double threshold) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double o = predicted[i];
    const double l = labels[i] != 0 ? 1.0 : 0.0;
    num += (o > threshold ? 1.0 : 0.0) * l;
    den += o + l - o * l;
  }
  return den == 0.0 ? 1.0 : num / den;
}

inline std::optional<double> lof_auc(
  const std::vector<double> & predicted, const std::vector<int> & labels,
  std::int64_t n_thresholds) {
  double positives = 0.0;
  for (int l : labels) positives += l != 0 ? 1.0 : 0.0;
  if (positives == 0.0) return std::nullopt;

  std::vector<double> recalls{0.0}, precisions{1.0};
  for (std::int64_t i = 0; i < n_thresholds; ++i) {
    const double th = static_cast<double>(i) / static_cast<double>(n_thresholds - 1);
    double tp = 0.0, predicted_pos = 0.0;
    for (std::size_t j = 0; j < predicted.size(); ++j) {
      if (predicted[j] > th) {
        predicted_pos += 1.0;
        if (labels[j] != 0) tp += 1.0;
      }
    }
    if (predicted_pos == 0.0) continue;
    recalls.push_back(tp / positives);
    precisions.push_back(tp / predicted_pos);
  }

  // Insertion sort by recall keeps equal-recall points in scan order, which
  // matches how a stable sort would arrange them.
  for (std::size_t i = 1; i < recalls.size(); ++i) {
    const double r = recalls[i], p = precisions[i];
    std::size_t j = i;
    while (j > 0 && recalls[j - 1] > r) {
      recalls[j] = recalls[j - 1];
      precisions[j] = precisions[j - 1];
      --j;
    }
    recalls[j] = r;
    precisions[j] = p;
  }

  double area = 0.0;
  for (std::size_t i = 1; i < recalls.size(); ++i) {
    area += (recalls[i] - recalls[i - 1]) * (precisions[i] + precisions[i - 1]) * 0.5;
  }
  return area;
}

// ---------------------------------------------------------------------------
// Winner selection and mixture likelihood.

/// Exhaustive winner scan: argmin over modes of the mean distance to ground
/// truth over valid steps; lower index wins ties; no valid steps gives -1.
inline std::vector<std::int64_t> wta_winners(const Forecast & f, const std::vector<Track> & gt) {
  std::vector<std::int64_t> winners(static_cast<std::size_t>(f.n_agents()), -1);
  for (std::int64_t a = 0; a < f.n_agents(); ++a) {
    const Track & tr = gt[static_cast<std::size_t>(a)];
    if (!tr.any_valid()) continue;
    double best = 0.0;
    std::int64_t best_k = -1;
    for (std::int64_t k = 0; k < f.n_modes(); ++k) {
      const double mean = *mode_ade(f, tr, a, k);
      if (best_k < 0 || mean < best) {
        best = mean;
        best_k = k;
      }
    }
    winners[static_cast<std::size_t>(a)] = best_k;
  }
  return winners;
}

/// Negative log mixture likelihood for one agent, evaluated in plain
/// probability space: -log sum_k p_k * prod over valid steps and coordinates
/// of the Laplace density (1 / 2b) * exp(-|x - mu| / b). Only usable at
/// small horizons where the product does not underflow.
inline double mixture_nll(
  const std::vector<double> & probs, const std::vector<std::vector<Vec2>> & means,
  const std::vector<std::vector<Vec2>> & scales, const Track & gt) {
  double mixture = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    double density = 1.0;
    for (std::size_t t = 0; t < gt.pos.size(); ++t) {
      if (gt.valid[t] == 0) continue;
      const double bx = scales[k][t].x, by = scales[k][t].y;
      density *= std::exp(-std::abs(gt.pos[t].x - means[k][t].x) / bx) / (2.0 * bx);
      density *= std::exp(-std::abs(gt.pos[t].y - means[k][t].y) / by) / (2.0 * by);
    }
    mixture += probs[k] * density;
  }
  return -std::log(mixture);
}

/// Softmax by definition, for feeding mixture_nll from raw logits.
inline std::vector<double> softmax(const std::vector<double> & logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double & v : out) v /= sum;
  return out;
}

// ---------------------------------------------------------------------------
// Neighborhood selection: quadratic scans over index pairs.

/// keys within `radius` (inclusive) of each query, in key order.
inline std::vector<std::vector<std::int64_t>> radius_neighbors(
  const std::vector<Vec2> & queries, const std::vector<Vec2> & keys, double radius,
  bool exclude_same_index) {
  std::vector<std::vector<std::int64_t>> out(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (std::size_t k = 0; k < keys.size(); ++k) {
      if (exclude_same_index && q == k) continue;
      if (dist(queries[q], keys[k]) <= radius) out[q].push_back(static_cast<std::int64_t>(k));
    }
  }
  return out;
}

/// Strictly earlier steps within `span` of each step; invalid steps neither
/// attend nor are attended to.
inline std::vector<std::vector<std::int64_t>> causal_neighbors(
  const std::vector<bool> & valid, std::int64_t span) {
  const auto n = static_cast<std::int64_t>(valid.size());
  std::vector<std::vector<std::int64_t>> out(valid.size());
  for (std::int64_t i = 0; i < n; ++i) {
    if (!valid[static_cast<std::size_t>(i)]) continue;
    for (std::int64_t j = 0; j < n; ++j) {
      if (!valid[static_cast<std::size_t>(j)]) continue;
      if (j < i && i - j <= span) out[static_cast<std::size_t>(i)].push_back(j);
    }
  }
  return out;
}

}  // namespace oracle

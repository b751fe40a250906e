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
#include <string>
#include <vector>

#include <json.hpp>

#include "futurenet/model/decoder.hpp"
#include "futurenet/objectives/targets.hpp"
#include "futurenet/scene/json_io.hpp"

namespace futurenet {

struct LossConfig {
  double alpha = 0.8;  // positive-label weight of the occupancy term
  double beta = 1.0;   // classification weight
  double rho = 20.0;   // occupancy weight
  double eps = 1e-7;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (beta < 0.0 || rho < 0.0) throw ConfigError("beta and rho must be non-negative");
    if (!(eps > 0.0 && eps < 0.5)) throw ConfigError("eps must lie in (0, 0.5)");
  }
};

inline void to_json(nlohmann::json & j, const LossConfig & c) {
  j = nlohmann::json{{"alpha", c.alpha}, {"beta", c.beta}, {"rho", c.rho}, {"eps", c.eps}};
}

inline void from_json(const nlohmann::json & j, LossConfig & c) {
  if (j.contains("alpha")) j.at("alpha").get_to(c.alpha);
  if (j.contains("beta")) j.at("beta").get_to(c.beta);
  if (j.contains("rho")) j.at("rho").get_to(c.rho);
  if (j.contains("eps")) j.at("eps").get_to(c.eps);
}

/// Negative log density of a Laplace distribution at `target`.
inline double laplace_nll(double mu, double b, double target) {
  return std::log(2.0 * b) + std::abs(target - mu) / b;
}

/// Winner mode per agent: lowest mean L2 distance to ground truth over the
/// agent's valid future steps, ties broken by the lower mode index. Agents
/// without any valid ground truth get -1. Selection runs on plain values;
/// nothing differentiates through it.
inline std::vector<std::int64_t> wta_select(
  const Tensor<double> & proposal_world, const FutureTargets & gt, std::int64_t n_modes) {
  std::vector<std::int64_t> winners(static_cast<std::size_t>(gt.n_agents), -1);
  for (std::int64_t a = 0; a < gt.n_agents; ++a) {
    if (!gt.has_any[static_cast<std::size_t>(a)]) continue;
    double best = 0.0;
    std::int64_t best_k = -1;
    for (std::int64_t k = 0; k < n_modes; ++k) {
      const std::int64_t row = a * n_modes + k;
      double sum = 0.0;
      std::int64_t count = 0;
      for (std::int64_t t = 0; t < gt.horizon; ++t) {
        if (gt.valid.at(a, t) == 0.0) continue;
        const double dx = proposal_world.at(row, 2 * t) - gt.pos.at(a, t, 0);
        const double dy = proposal_world.at(row, 2 * t + 1) - gt.pos.at(a, t, 1);
        sum += std::sqrt(dx * dx + dy * dy);
        count += 1;
      }
      const double mean = sum / static_cast<double>(count);
      if (best_k < 0 || mean < best) {
        best = mean;
        best_k = k;
      }
    }
    winners[static_cast<std::size_t>(a)] = best_k;
  }
  return winners;
}

namespace loss_detail {

/// Mean winner-mode Laplace negative log-likelihood over valid
/// (agent, step, coordinate) entries. Only winner rows enter the graph, so
/// losing modes receive exactly zero gradient.
template <typename T>
Var winner_nll(
  Graph<T> & g, Var waypoints, Var scales, const FutureTargets & gt,
  const std::vector<std::int64_t> & winners, std::int64_t n_modes) {
  std::vector<std::int64_t> rows;
  std::vector<std::int64_t> agents;
  for (std::int64_t a = 0; a < gt.n_agents; ++a) {
    const std::int64_t k = winners[static_cast<std::size_t>(a)];
    if (k < 0) continue;
    rows.push_back(a * n_modes + k);
    agents.push_back(a);
  }
  if (rows.empty()) return g.constant(Tensor<T>::zeros({1, 1}));

  const auto n_sel = static_cast<std::int64_t>(rows.size());
  const std::int64_t w = 2 * gt.horizon;
  Tensor<T> target = Tensor<T>::zeros({n_sel, w});
  Tensor<double> weight = Tensor<double>::zeros({n_sel, w});
  double total = 0.0;
  for (std::int64_t i = 0; i < n_sel; ++i) {
    const std::int64_t a = agents[static_cast<std::size_t>(i)];
    for (std::int64_t t = 0; t < gt.horizon; ++t) {
      target.at(i, 2 * t) = static_cast<T>(gt.pos.at(a, t, 0));
      target.at(i, 2 * t + 1) = static_cast<T>(gt.pos.at(a, t, 1));
      if (gt.valid.at(a, t) == 0.0) continue;
      weight.at(i, 2 * t) = 1.0;
      weight.at(i, 2 * t + 1) = 1.0;
      total += 2.0;
    }
  }
  for (std::int64_t i = 0; i < weight.numel(); ++i) weight.data()[i] /= total;

  Var mu = g.gather_rows(waypoints, rows);
  Var b = g.gather_rows(scales, std::move(rows));
  Var nll = g.add(g.logv(g.scale(b, 2.0)), g.div(g.absv(g.sub(mu, g.constant(std::move(target)))), b));
  return g.dot_const(nll, std::move(weight));
}

}  // namespace loss_detail

/// (L_propose, L_refine): winner-mode regression terms for the proposal and
/// refined trajectories under one shared winner selection.
template <typename T>
std::pair<Var, Var> regression_loss(
  Graph<T> & g, const DecodeOutputs<T> & out, const FutureTargets & gt,
  const std::vector<std::int64_t> & winners) {
  Var propose = loss_detail::winner_nll(
    g, out.proposals.var, out.proposal_scales, gt, winners, out.n_modes);
  Var refine = loss_detail::winner_nll(
    g, out.refined.var, out.refined_scales, gt, winners, out.n_modes);
  return {propose, refine};
}

/// Mixture assignment loss: mean over agents of
/// -log sum_k p_k * exp(sum over valid coords of log-Laplace), evaluated in
/// log space. Trajectory terms enter as constants; only the mode logits
/// receive gradient.
template <typename T>
Var classification_loss(Graph<T> & g, const DecodeOutputs<T> & out, const FutureTargets & gt) {
  const std::int64_t na = out.n_agents, k_modes = out.n_modes;
  Tensor<T> ell = Tensor<T>::zeros({na, k_modes});
  const Tensor<T> & sc = g.value(out.refined_scales);
  std::int64_t included = 0;
  for (std::int64_t a = 0; a < na; ++a) {
    if (!gt.has_any[static_cast<std::size_t>(a)]) continue;
    included += 1;
    for (std::int64_t k = 0; k < k_modes; ++k) {
      const std::int64_t row = a * k_modes + k;
      double sum = 0.0;
      for (std::int64_t t = 0; t < gt.horizon; ++t) {
        if (gt.valid.at(a, t) == 0.0) continue;
        for (std::int64_t c = 0; c < 2; ++c) {
          sum -= laplace_nll(
            out.refined.world.at(row, 2 * t + c),
            static_cast<double>(sc.at(row, 2 * t + c)), gt.pos.at(a, t, c));
        }
      }
      ell.at(a, k) = static_cast<T>(sum);
    }
  }
  if (included == 0) return g.constant(Tensor<T>::zeros({1, 1}));

  Var joint = g.add(g.log_softmax_rows(out.mode_logits), g.constant(std::move(ell)));
  Var lse = g.logsumexp_rows(joint);
  Tensor<double> weight = Tensor<double>::zeros({na, 1});
  for (std::int64_t a = 0; a < na; ++a) {
    if (gt.has_any[static_cast<std::size_t>(a)]) {
      weight.at(a, 0) = -1.0 / static_cast<double>(included);
    }
  }
  return g.dot_const(lse, std::move(weight));
}

/// Balanced binary cross-entropy over the predicted occupancy field:
/// mean of -[alpha * label * log O + (1 - alpha) * (1 - label) * log(1 - O)].
template <typename T>
Var lof_loss(Graph<T> & g, Var lof, const LofLabels & labels, double alpha) {
  const Tensor<T> & v = g.value(lof);
  const std::int64_t n_kf = v.shape()[0], n_m = v.shape()[1];
  if (static_cast<std::int64_t>(labels.values.size()) != n_kf ||
      (n_kf > 0 && static_cast<std::int64_t>(labels.values[0].size()) != n_m)) {
    throw DataError("occupancy labels do not match the predicted field shape");
  }
  const double inv = 1.0 / static_cast<double>(n_kf * n_m);
  Tensor<double> w_pos = Tensor<double>::zeros({n_kf, n_m});
  Tensor<double> w_neg = Tensor<double>::zeros({n_kf, n_m});
  for (std::int64_t kf = 0; kf < n_kf; ++kf) {
    for (std::int64_t i = 0; i < n_m; ++i) {
      const bool occupied =
        labels.values[static_cast<std::size_t>(kf)][static_cast<std::size_t>(i)] != 0;
      if (occupied) {
        w_pos.at(kf, i) = -alpha * inv;
      } else {
        w_neg.at(kf, i) = -(1.0 - alpha) * inv;
      }
    }
  }
  Var log_o = g.logv(lof);
  Var log_not_o = g.logv(g.add_scalar(g.scale(lof, -1.0), 1.0));
  return g.add(g.dot_const(log_o, std::move(w_pos)), g.dot_const(log_not_o, std::move(w_neg)));
}

/// All loss parts plus the weighted total, with plain-value copies for logs.
struct LossValues {
  double propose = 0.0;
  double refine = 0.0;
  double classification = 0.0;
  double lof = 0.0;
  double total = 0.0;
  bool empty_agents = false;
};

template <typename T>
struct LossBreakdown {
  Var propose;
  Var refine;
  Var classification;
  Var lof;  // invalid when the occupancy branch is off
  Var total;
  LossValues values;
};

namespace loss_detail {

template <typename T>
double checked_value(const Graph<T> & g, Var v, const char * part) {
  const double x = static_cast<double>(g.value(v).data()[0]);
  if (!std::isfinite(x)) {
    throw NumericError(std::string("non-finite ") + part + " loss");
  }
  return x;
}

}  // namespace loss_detail

/// Weighted total of the finished parts. Any non-finite part aborts, naming
/// the offending term.
template <typename T>
Var total_loss(Graph<T> & g, Var propose, Var refine, Var classification, Var lof,
               const LossConfig & cfg) {
  loss_detail::checked_value(g, propose, "proposal regression");
  loss_detail::checked_value(g, refine, "refinement regression");
  loss_detail::checked_value(g, classification, "classification");
  Var total = g.add(g.add(propose, refine), g.scale(classification, cfg.beta));
  if (lof.valid()) {
    loss_detail::checked_value(g, lof, "occupancy");
    total = g.add(total, g.scale(lof, cfg.rho));
  }
  loss_detail::checked_value(g, total, "total");
  return total;
}

/// One-call training objective for a decoded scene.
template <typename T>
LossBreakdown<T> compute_losses(
  Graph<T> & g, const DecodeOutputs<T> & out, const FutureTargets & gt,
  const LofLabels * labels, const LossConfig & cfg) {
  LossBreakdown<T> lb;
  const std::vector<std::int64_t> winners = wta_select(out.proposals.world, gt, out.n_modes);
  bool any = false;
  for (auto w : winners) any = any || w >= 0;
  lb.values.empty_agents = !any;

  auto [propose, refine] = regression_loss(g, out, gt, winners);
  lb.propose = propose;
  lb.refine = refine;
  lb.classification = classification_loss(g, out, gt);
  if (out.lof.valid()) {
    if (labels == nullptr) throw DataError("occupancy branch enabled but labels missing");
    lb.lof = lof_loss(g, out.lof, *labels, cfg.alpha);
  }
  lb.total = total_loss(g, lb.propose, lb.refine, lb.classification, lb.lof, cfg);

  lb.values.propose = static_cast<double>(g.value(lb.propose).data()[0]);
  lb.values.refine = static_cast<double>(g.value(lb.refine).data()[0]);
  lb.values.classification = static_cast<double>(g.value(lb.classification).data()[0]);
  lb.values.lof = lb.lof.valid() ? static_cast<double>(g.value(lb.lof).data()[0]) : 0.0;
  lb.values.total = static_cast<double>(g.value(lb.total).data()[0]);
  return lb;
}

}  // namespace futurenet

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
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "futurenet/core/error.hpp"
#include "futurenet/core/params.hpp"

namespace futurenet {

enum class Precision { kSingle, kDouble };

inline std::string to_string(Precision p) {
  return p == Precision::kSingle ? "single" : "double";
}

inline Precision precision_from_string(const std::string & s) {
  if (s == "single") return Precision::kSingle;
  if (s == "double") return Precision::kDouble;
  throw ConfigError("unknown precision '" + s + "'");
}

struct TrainConfig {
  std::int64_t batch_size = 32;
  double lr0 = 5e-4;
  double weight_decay = 1e-4;
  std::int64_t total_steps = 2000;
  double lr_min = 0.0;
  std::uint64_t seed = 0;
  double grad_clip_norm = 1.0;
  Precision precision = Precision::kSingle;
  std::int64_t checkpoint_every = 0;  // 0 = final checkpoint only

  void validate() const {
    if (!(lr0 > 0.0)) throw ConfigError("lr0 must be positive");
    if (total_steps < 1) throw ConfigError("total_steps must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (lr_min < 0.0 || lr_min > lr0) throw ConfigError("lr_min must lie in [0, lr0]");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
    if (!(grad_clip_norm > 0.0)) throw ConfigError("grad_clip_norm must be positive");
    if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be non-negative");
  }
};

inline void to_json(nlohmann::json & j, const TrainConfig & c) {
  j = nlohmann::json{
    {"batch_size", c.batch_size},
    {"lr0", c.lr0},
    {"weight_decay", c.weight_decay},
    {"total_steps", c.total_steps},
    {"lr_min", c.lr_min},
    {"seed", c.seed},
    {"grad_clip_norm", c.grad_clip_norm},
    {"precision", to_string(c.precision)},
    {"checkpoint_every", c.checkpoint_every}};
}

inline void from_json(const nlohmann::json & j, TrainConfig & c) {
  if (j.contains("batch_size")) j.at("batch_size").get_to(c.batch_size);
  if (j.contains("lr0")) j.at("lr0").get_to(c.lr0);
  if (j.contains("weight_decay")) j.at("weight_decay").get_to(c.weight_decay);
  if (j.contains("total_steps")) j.at("total_steps").get_to(c.total_steps);
  if (j.contains("lr_min")) j.at("lr_min").get_to(c.lr_min);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (j.contains("grad_clip_norm")) j.at("grad_clip_norm").get_to(c.grad_clip_norm);
  if (j.contains("precision")) c.precision = precision_from_string(j.at("precision").get<std::string>());
  if (j.contains("checkpoint_every")) j.at("checkpoint_every").get_to(c.checkpoint_every);
}

/// Cosine annealing from lr0 down to lr_min over total_steps.
inline double lr_schedule(std::int64_t step, const TrainConfig & c) {
  const double frac = static_cast<double>(step) / static_cast<double>(c.total_steps);
  return c.lr_min + 0.5 * (c.lr0 - c.lr_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

/// Scale all accumulated gradients so their global L2 norm does not exceed
/// max_norm. Returns the pre-clip norm.
inline double clip_global_norm(ParamStore & ps, double max_norm) {
  double sq = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Tensor<double> & g = ps.grad(i);
    for (std::int64_t j = 0; j < g.numel(); ++j) sq += g.data()[j] * g.data()[j];
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      Tensor<double> & g = ps.grad(i);
      for (std::int64_t j = 0; j < g.numel(); ++j) g.data()[j] *= scale;
    }
  }
  return norm;
}

/// Adam with decoupled weight decay. The decay term is scaled by the current
/// learning rate, so a step at lr 0 is an exact no-op on the parameters.
/// Moments live in double alongside the master parameters.
class AdamW {
 public:
  AdamW(ParamStore & ps, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8)
      : ps_(ps), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (std::size_t i = 0; i < ps.size(); ++i) {
      m_.push_back(Tensor<double>::zeros(ps.tensor(i).shape()));
      v_.push_back(Tensor<double>::zeros(ps.tensor(i).shape()));
    }
  }

  /// One update from the gradients currently accumulated in the store.
  /// Does not zero them; the caller owns that.
  void step(double lr) {
    t_ += 1;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < ps_.size(); ++i) {
      Tensor<double> & p = ps_.tensor(i);
      const Tensor<double> & g = ps_.grad(i);
      Tensor<double> & m = m_[i];
      Tensor<double> & v = v_[i];
      for (std::int64_t j = 0; j < p.numel(); ++j) {
        m.data()[j] = beta1_ * m.data()[j] + (1.0 - beta1_) * g.data()[j];
        v.data()[j] = beta2_ * v.data()[j] + (1.0 - beta2_) * g.data()[j] * g.data()[j];
        const double mhat = m.data()[j] / bc1;
        const double vhat = v.data()[j] / bc2;
        p.data()[j] -= lr * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * p.data()[j]);
      }
    }
  }

  std::int64_t step_count() const { return t_; }
  std::vector<Tensor<double>> & first_moments() { return m_; }
  std::vector<Tensor<double>> & second_moments() { return v_; }
  void set_step_count(std::int64_t t) { t_ = t; }

 private:
  ParamStore & ps_;
  double weight_decay_;
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<Tensor<double>> m_;
  std::vector<Tensor<double>> v_;
};

}  // namespace futurenet

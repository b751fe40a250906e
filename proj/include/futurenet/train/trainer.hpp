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
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "futurenet/model/decoder.hpp"
#include "futurenet/objectives/losses.hpp"
#include "futurenet/scene/dataset.hpp"
#include "futurenet/train/checkpoint.hpp"
#include "futurenet/train/optimizer.hpp"

namespace futurenet {

struct TrainLogRecord {
  std::int64_t step = 0;
  double lr = 0.0;
  double l_propose = 0.0;
  double l_refine = 0.0;
  double l_cls = 0.0;
  double l_lof = 0.0;
  double total = 0.0;
};

inline void to_json(nlohmann::json & j, const TrainLogRecord & r) {
  j = nlohmann::json{
    {"step", r.step},         {"lr", r.lr},           {"L_propose", r.l_propose},
    {"L_refine", r.l_refine}, {"L_cls", r.l_cls},     {"L_lof", r.l_lof},
    {"total", r.total}};
}

inline void from_json(const nlohmann::json & j, TrainLogRecord & r) {
  j.at("step").get_to(r.step);
  j.at("lr").get_to(r.lr);
  j.at("L_propose").get_to(r.l_propose);
  j.at("L_refine").get_to(r.l_refine);
  j.at("L_cls").get_to(r.l_cls);
  j.at("L_lof").get_to(r.l_lof);
  j.at("total").get_to(r.total);
}

struct TrainOptions {
  std::string checkpoint_path;  // empty = never written
  std::string log_path;         // empty = no log file
  bool append_log = false;
  std::int64_t max_steps_this_run = -1;  // -1 = run to total_steps
  const Checkpoint * resume = nullptr;
};

struct TrainResult {
  std::vector<TrainLogRecord> log;
  std::int64_t final_step = 0;
  double initial_total = 0.0;
  double final_total = 0.0;
};

inline void check_scene_horizons(const Scene & scene, const ModelConfig & cfg) {
  if (scene.history_len() != cfg.t_history || scene.future_len() != cfg.t_future) {
    throw DataError(
      "scene '" + scene.scene_id + "' horizons (" + std::to_string(scene.history_len()) + ", " +
      std::to_string(scene.future_len()) + ") do not match the model config (" +
      std::to_string(cfg.t_history) + ", " + std::to_string(cfg.t_future) + ")");
  }
}

namespace train_detail {

/// Deterministic pass over shuffled epochs: every epoch is an independent
/// permutation of the dataset, and batches consume it sequentially, crossing
/// epoch boundaries when needed. The stream position is a pure function of
/// how many indices were consumed, so resumed runs stay aligned.
class BatchSampler {
 public:
  BatchSampler(std::uint64_t seed, std::int64_t n) : seed_(seed), n_(n) {
    perm_.resize(static_cast<std::size_t>(n));
    reshuffle();
  }

  void skip_to(std::int64_t consumed) {
    epoch_ = consumed / n_;
    cursor_ = consumed % n_;
    reshuffle();
  }

  std::vector<std::int64_t> next(std::int64_t batch_size) {
    std::vector<std::int64_t> batch;
    batch.reserve(static_cast<std::size_t>(batch_size));
    for (std::int64_t i = 0; i < batch_size; ++i) {
      if (cursor_ == n_) {
        epoch_ += 1;
        cursor_ = 0;
        reshuffle();
      }
      batch.push_back(perm_[static_cast<std::size_t>(cursor_)]);
      cursor_ += 1;
    }
    return batch;
  }

 private:
  void reshuffle() {
    std::iota(perm_.begin(), perm_.end(), 0);
    RandomStream rng(RandomStream::mix(seed_ ^ 0x9e3779b97f4a7c15ULL,
                                       static_cast<std::uint64_t>(epoch_)));
    for (std::int64_t i = n_ - 1; i > 0; --i) {
      const std::int64_t j = rng.uniform_int(0, i);
      std::swap(perm_[static_cast<std::size_t>(i)], perm_[static_cast<std::size_t>(j)]);
    }
  }

  std::uint64_t seed_;
  std::int64_t n_;
  std::int64_t epoch_ = 0;
  std::int64_t cursor_ = 0;
  std::vector<std::int64_t> perm_;
};

template <typename T>
TrainResult run(
  const std::vector<SceneRecord> & records, const ModelConfig & model_cfg,
  const LossConfig & loss_cfg, const TrainConfig & train_cfg, const TrainOptions & options) {
  model_cfg.validate();
  loss_cfg.validate();
  train_cfg.validate();
  if (records.empty()) throw DataError("training set is empty");

  ParamStore ps(train_cfg.seed);
  register_model(ps, model_cfg);
  std::int64_t start_step = 0;

  AdamW opt(ps, train_cfg.weight_decay);
  if (options.resume != nullptr) {
    const Checkpoint & ck = *options.resume;
    if (nlohmann::json(ck.header.model) != nlohmann::json(model_cfg)) {
      throw CheckpointError("resume checkpoint was trained with a different model config");
    }
    for (std::size_t i = 0; i < ps.size(); ++i) ps.tensor(i) = ck.params.tensor(i);
    start_step = ck.header.step;
    if (ck.header.has_optimizer) {
      opt.set_step_count(ck.adam_step);
      opt.first_moments() = ck.adam_m;
      opt.second_moments() = ck.adam_v;
    }
  }

  // Per-scene work that does not move during training.
  std::vector<EncoderPlan> plans;
  std::vector<FutureTargets> targets;
  std::vector<LofLabels> labels;
  plans.reserve(records.size());
  targets.reserve(records.size());
  for (const auto & rec : records) {
    check_scene_horizons(rec.scene, model_cfg);
    plans.push_back(make_encoder_plan(rec.scene, model_cfg));
    targets.push_back(make_future_targets(rec.scene));
    if (model_cfg.use_lof) {
      labels.push_back(ensure_labels(
        rec.scene, rec.labels, keyframe_steps_for(model_cfg.t_future, model_cfg.n_keyframes)));
    }
  }

  const auto n_scenes = static_cast<std::int64_t>(records.size());
  const std::int64_t batch_n = std::min(train_cfg.batch_size, n_scenes);
  BatchSampler sampler(train_cfg.seed, n_scenes);
  sampler.skip_to(start_step * batch_n);

  std::ofstream log_file;
  if (!options.log_path.empty()) {
    log_file.open(options.log_path, options.append_log ? std::ios::app : std::ios::trunc);
    if (!log_file) throw IoError("cannot open training log '" + options.log_path + "'");
  }

  std::int64_t end_step = train_cfg.total_steps;
  if (options.max_steps_this_run >= 0) {
    end_step = std::min(end_step, start_step + options.max_steps_this_run);
  }

  TrainResult result;
  result.final_step = start_step;
  for (std::int64_t step = start_step; step < end_step; ++step) {
    const double lr = lr_schedule(step, train_cfg);
    const std::vector<std::int64_t> batch = sampler.next(batch_n);
    const double inv = 1.0 / static_cast<double>(batch_n);

    ps.zero_grads();
    TrainLogRecord rec;
    rec.step = step;
    rec.lr = lr;
    for (const std::int64_t idx : batch) {
      const auto i = static_cast<std::size_t>(idx);
      Graph<T> g;
      BoundParams bound = ps.bind(g);
      try {
        DecodeOutputs<T> out = forward_scene(g, bound, model_cfg, plans[i]);
        LossBreakdown<T> lb = compute_losses(
          g, out, targets[i], model_cfg.use_lof ? &labels[i] : nullptr, loss_cfg);
        g.backward(lb.total);
        ps.accumulate_grads(g, bound, inv);
        rec.l_propose += inv * lb.values.propose;
        rec.l_refine += inv * lb.values.refine;
        rec.l_cls += inv * lb.values.classification;
        rec.l_lof += inv * lb.values.lof;
        rec.total += inv * lb.values.total;
      } catch (const NumericError & e) {
        throw NumericError(
          std::string(e.what()) + " at step " + std::to_string(step) + " on scene '" +
          records[i].scene.scene_id + "'");
      }
    }
    clip_global_norm(ps, train_cfg.grad_clip_norm);
    opt.step(lr);

    if (result.log.empty()) result.initial_total = rec.total;
    result.final_total = rec.total;
    result.final_step = step + 1;
    if (log_file.is_open()) log_file << nlohmann::json(rec).dump() << "\n";
    result.log.push_back(rec);

    if (!options.checkpoint_path.empty() && train_cfg.checkpoint_every > 0 &&
        (step + 1) % train_cfg.checkpoint_every == 0 && step + 1 < end_step) {
      save_checkpoint(options.checkpoint_path, model_cfg, ps, step + 1, &opt);
    }
  }

  if (!options.checkpoint_path.empty()) {
    save_checkpoint(options.checkpoint_path, model_cfg, ps, result.final_step, &opt);
  }
  return result;
}

}  // namespace train_detail

/// Full training pass in the configured precision. Deterministic given the
/// seed: batch order, initialization, and arithmetic are all derived from it
/// on a single thread.
inline TrainResult train(
  const std::vector<SceneRecord> & records, const ModelConfig & model_cfg,
  const LossConfig & loss_cfg, const TrainConfig & train_cfg, const TrainOptions & options = {}) {
  if (train_cfg.precision == Precision::kDouble) {
    return train_detail::run<double>(records, model_cfg, loss_cfg, train_cfg, options);
  }
  return train_detail::run<float>(records, model_cfg, loss_cfg, train_cfg, options);
}

}  // namespace futurenet

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

#include "futurenet/model/encoder.hpp"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "futurenet/synth/generator.hpp"
#include "test_util.hpp"

namespace fn = futurenet;

namespace {

fn::ModelConfig small_config() {
  fn::ModelConfig cfg;
  cfg.d_model = 32;
  cfg.n_heads = 4;
  cfg.n_modes = 2;
  cfg.t_history = 10;
  cfg.t_future = 30;
  return cfg;
}

fn::GenConfig small_gen() {
  fn::GenConfig gen;
  gen.n_agents_min = 2;
  gen.n_agents_max = 4;
  return gen;
}

fn::Tensor<double> encode_states(
  const fn::Scene & scene, const fn::ModelConfig & cfg, const fn::ParamStore & ps) {
  fn::Graph<double> g;
  const fn::BoundParams p = ps.bind(g);
  const fn::EncoderPlan plan = fn::make_encoder_plan(scene, cfg);
  const auto enc = fn::encode_scene(g, p, cfg, plan);
  return g.value(enc.state_feat);
}

double max_abs_diff(const fn::Tensor<double> & a, const fn::Tensor<double> & b) {
  double worst = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

TEST(Encoder, FeaturesAreInvariantUnderRigidTransforms) {
  const fn::ModelConfig cfg = small_config();
  fn::ParamStore ps(0xfeed);
  fn::register_encoder(ps, cfg);

  testutil::Rng rng(21);
  for (int it = 0; it < 5; ++it) {
    const fn::Scene scene =
      fn::generate_scene(small_gen(), static_cast<std::uint64_t>(100 + it), "inv");
    const fn::Tensor<double> base = encode_states(scene, cfg, ps);
    const fn::Pose2 g{
      testutil::uniform(rng, -200.0, 200.0), testutil::uniform(rng, -200.0, 200.0),
      testutil::uniform(rng, -M_PI + 1e-6, M_PI)};
    const fn::Tensor<double> moved = encode_states(fn::apply_rigid_transform(scene, g), cfg, ps);
    EXPECT_LT(max_abs_diff(base, moved), 1e-8);
  }
}

TEST(Encoder, PastStatesIgnoreLaterHistoryEdits) {
  const fn::ModelConfig cfg = small_config();
  fn::ParamStore ps(0xfeed);
  fn::register_encoder(ps, cfg);

  fn::Scene scene = fn::generate_scene(small_gen(), 55, "causal");
  const fn::Tensor<double> base = encode_states(scene, cfg, ps);
  const std::int64_t d = cfg.d_model;
  const std::int64_t t_h = cfg.t_history;

  // Kick the second-to-last observed state of agent 0 sideways. Steps before
  // it may not change; the tail of the sequence may.
  const std::int64_t edit_step = t_h - 2;
  scene.agents[0].states[static_cast<std::size_t>(edit_step)].pose.y += 1.5;
  const fn::Tensor<double> after = encode_states(scene, cfg, ps);

  double before_edit = 0.0, from_edit = 0.0;
  for (std::int64_t t = 0; t < t_h; ++t) {
    double diff = 0.0;
    for (std::int64_t j = 0; j < d; ++j) {
      diff = std::max(diff, std::abs(after.at(t, j) - base.at(t, j)));
    }
    if (t < edit_step) {
      before_edit = std::max(before_edit, diff);
    } else {
      from_edit = std::max(from_edit, diff);
    }
  }
  EXPECT_EQ(before_edit, 0.0);
  EXPECT_GT(from_edit, 1e-6);
}

TEST(Encoder, AgentOrderPermutesFeaturesWithoutChangingThem) {
  const fn::ModelConfig cfg = small_config();
  fn::ParamStore ps(0xfeed);
  fn::register_encoder(ps, cfg);

  const fn::Scene scene = fn::generate_scene(small_gen(), 77, "perm");
  const auto na = static_cast<std::int64_t>(scene.agents.size());
  ASSERT_GE(na, 2);

  fn::Scene swapped = scene;
  std::swap(swapped.agents[0], swapped.agents[1]);

  const fn::Tensor<double> base = encode_states(scene, cfg, ps);
  const fn::Tensor<double> perm = encode_states(swapped, cfg, ps);

  const std::int64_t t_h = cfg.t_history, d = cfg.d_model;
  const auto block = [&](const fn::Tensor<double> & feats, std::int64_t agent, std::int64_t t,
                         std::int64_t j) { return feats.at(agent * t_h + t, j); };
  double worst = 0.0;
  for (std::int64_t t = 0; t < t_h; ++t) {
    for (std::int64_t j = 0; j < d; ++j) {
      worst = std::max(worst, std::abs(block(base, 0, t, j) - block(perm, 1, t, j)));
      worst = std::max(worst, std::abs(block(base, 1, t, j) - block(perm, 0, t, j)));
      for (std::int64_t a = 2; a < na; ++a) {
        worst = std::max(worst, std::abs(block(base, a, t, j) - block(perm, a, t, j)));
      }
    }
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Encoder, SingleAndDoublePrecisionAgreeLoosely) {
  const fn::ModelConfig cfg = small_config();
  fn::ParamStore ps(0xfeed);
  fn::register_encoder(ps, cfg);
  const fn::Scene scene = fn::generate_scene(small_gen(), 31, "prec");
  const fn::EncoderPlan plan = fn::make_encoder_plan(scene, cfg);

  fn::Graph<double> gd;
  const auto encd = fn::encode_scene(gd, ps.bind(gd), cfg, plan);
  fn::Graph<float> gf;
  const auto encf = fn::encode_scene(gf, ps.bind(gf), cfg, plan);

  const auto & vd = gd.value(encd.state_feat);
  const auto & vf = gf.value(encf.state_feat);
  double worst = 0.0;
  for (std::int64_t i = 0; i < vd.numel(); ++i) {
    worst = std::max(worst, std::abs(vd.data()[i] - static_cast<double>(vf.data()[i])));
  }
  EXPECT_LT(worst, 1e-2);
  EXPECT_GT(worst, 0.0);
}

}  // namespace

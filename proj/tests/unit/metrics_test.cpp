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

#include "futurenet/metrics/metrics.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_util.hpp"

namespace fn = futurenet;

namespace {

TEST(OccupancyIou, MatchesHandEvaluatedExample) {
  // One point above the binarization threshold on a positive label, one on a
  // negative: intersection 1, soft union 0.6 + 1 - 0.6 + 0.6 = 1.6.
  EXPECT_NEAR(fn::lof_iou({0.6, 0.6}, {1, 0}, 0.5), 0.625, 1e-9);
}

TEST(OccupancyIou, PerfectBinaryAgreementIsOne) {
  EXPECT_DOUBLE_EQ(fn::lof_iou({1.0, 0.0, 1.0}, {1, 0, 1}, 0.3), 1.0);
  EXPECT_DOUBLE_EQ(fn::lof_iou({1.0, 0.0, 1.0}, {1, 0, 1}, 0.9), 1.0);
}

TEST(OccupancyIou, ZeroPredictionAgainstPositivesIsZero) {
  EXPECT_DOUBLE_EQ(fn::lof_iou({0.0, 0.0}, {1, 1}, 0.5), 0.0);
}

TEST(OccupancyIou, EmptyFieldAndEmptyLabelsAgreePerfectly) {
  EXPECT_DOUBLE_EQ(fn::lof_iou({0.0, 0.0}, {0, 0}, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(fn::lof_iou({}, {}, 0.5), 1.0);
}

TEST(OccupancyIou, RejectsThresholdOutsideOpenUnitInterval) {
  EXPECT_THROW(fn::lof_iou({0.5}, {1}, 0.0), fn::ConfigError);
  EXPECT_THROW(fn::lof_iou({0.5}, {1}, 1.0), fn::ConfigError);
}

TEST(OccupancyIou, RejectsSizeMismatch) {
  EXPECT_THROW(fn::lof_iou({0.5, 0.5}, {1}, 0.5), fn::DataError);
}

TEST(OccupancyAuc, UndefinedWithoutLabelPositives) {
  EXPECT_FALSE(fn::lof_auc({0.2, 0.9}, {0, 0}).has_value());
}

TEST(OccupancyAuc, ConfidentPerfectPredictionScoresOne) {
  const auto auc = fn::lof_auc({1.0, 1.0, 0.0, 0.0}, {1, 1, 0, 0});
  ASSERT_TRUE(auc.has_value());
  EXPECT_NEAR(*auc, 1.0, 1e-9);
}

TEST(OccupancyAuc, AllZeroPredictionHasZeroArea) {
  const auto auc = fn::lof_auc({0.0, 0.0}, {1, 0});
  ASSERT_TRUE(auc.has_value());
  EXPECT_DOUBLE_EQ(*auc, 0.0);
}

TEST(OccupancyAuc, RejectsFewerThanTwoThresholds) {
  EXPECT_THROW(fn::lof_auc({0.5}, {1}, 1), fn::ConfigError);
}

TEST(OccupancyMetrics, MatchReferenceOnRandomFields) {
  testutil::Rng rng(0xa11ce);
  for (int it = 0; it < 200; ++it) {
    const auto n = static_cast<std::size_t>(testutil::uniform_int(rng, 1, 50));
    std::vector<double> predicted(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      predicted[i] = testutil::uniform(rng, 0.0, 1.0);
      labels[i] = testutil::uniform_int(rng, 0, 2) == 0 ? 1 : 0;
    }
    const double th = testutil::uniform(rng, 0.05, 0.95);
    EXPECT_NEAR(fn::lof_iou(predicted, labels, th), oracle::lof_iou(predicted, labels, th), 1e-9);

    const auto n_th = testutil::uniform_int(rng, 2, 120);
    const auto got = fn::lof_auc(predicted, labels, n_th);
    const auto want = oracle::lof_auc(predicted, labels, n_th);
    ASSERT_EQ(got.has_value(), want.has_value());
    if (got) EXPECT_NEAR(*got, *want, 1e-9);
  }
}

TEST(TrajectoryMetrics, RejectModeCountOutsideRange) {
  testutil::Rng rng(1);
  const auto f = testutil::random_forecast(rng, 2, 3, 4);
  const auto gt = testutil::random_targets(rng, 2, 4);
  EXPECT_THROW(fn::min_ade(f, gt, 0), fn::ConfigError);
  EXPECT_THROW(fn::min_fde(f, gt, 4), fn::ConfigError);
}

TEST(TrajectoryMetrics, EndpointErrorOfExactlyTwoMetersIsNotAMiss) {
  futurenet::TrajectoryForecast f;
  f.means = fn::Tensor<double>::zeros({1, 1, 1, 2});
  f.scales = fn::Tensor<double>::zeros({1, 1, 1, 2});
  f.probs = fn::Tensor<double>::zeros({1, 1});
  f.means.at(0, 0, 0, 0) = 2.0;
  f.probs.at(0, 0) = 1.0;

  fn::FutureTargets gt;
  gt.n_agents = 1;
  gt.horizon = 1;
  gt.pos = fn::Tensor<double>::zeros({1, 1, 2});
  gt.valid = fn::Tensor<double>::zeros({1, 1});
  gt.valid.at(0, 0) = 1.0;
  gt.has_any = {true};

  EXPECT_DOUBLE_EQ(fn::miss_rate(f, gt, 1), 0.0);
  f.means.at(0, 0, 0, 0) = 2.0 + 1e-9;
  EXPECT_DOUBLE_EQ(fn::miss_rate(f, gt, 1), 1.0);
}

TEST(TrajectoryMetrics, AgentsWithoutFinalStepOnlyCountTowardAde) {
  testutil::Rng rng(7);
  auto f = testutil::random_forecast(rng, 2, 2, 3);
  auto gt = testutil::random_targets(rng, 2, 3);
  // Agent 0: valid early step only. Agent 1: fully valid.
  for (std::int64_t t = 0; t < 3; ++t) {
    gt.valid.at(0, t) = t == 0 ? 1.0 : 0.0;
    gt.valid.at(1, t) = 1.0;
  }
  gt.has_any = {true, true};

  fn::MetricAccumulator ade, fde;
  fn::accumulate_min_ade(f, gt, 2, ade);
  fn::accumulate_min_fde(f, gt, 2, fde);
  EXPECT_EQ(ade.count, 2);
  EXPECT_EQ(fde.count, 1);
}

TEST(TrajectoryMetrics, TiedProbabilitiesPreferTheLowerModeIndex) {
  testutil::Rng rng(3);
  auto f = testutil::random_forecast(rng, 1, 3, 2, 20.0, /*tied_probs=*/true);
  auto gt = testutil::random_targets(rng, 1, 2);
  for (std::int64_t t = 0; t < 2; ++t) gt.valid.at(0, t) = 1.0;
  gt.has_any = {true};
  // k = 1 with uniform probabilities must evaluate mode 0 only.
  const double dx = f.means.at(0, 0, 1, 0) - gt.pos.at(0, 1, 0);
  const double dy = f.means.at(0, 0, 1, 1) - gt.pos.at(0, 1, 1);
  EXPECT_NEAR(fn::min_fde(f, gt, 1), std::sqrt(dx * dx + dy * dy), 1e-12);
}

TEST(TrajectoryMetrics, MatchReferenceOnRandomInstances) {
  testutil::Rng rng(0xbeef);
  for (int it = 0; it < 200; ++it) {
    const std::int64_t na = testutil::uniform_int(rng, 1, 4);
    const std::int64_t k_modes = testutil::uniform_int(rng, 1, 6);
    const std::int64_t t = testutil::uniform_int(rng, 1, 10);
    const bool tie = it % 5 == 0;
    const auto f = testutil::random_forecast(rng, na, k_modes, t, 20.0, tie);
    const auto gt = testutil::random_targets(rng, na, t);
    const auto of = testutil::to_oracle(f);
    const auto ogt = testutil::to_oracle(gt);
    const std::int64_t k = testutil::uniform_int(rng, 1, k_modes);

    EXPECT_NEAR(fn::min_ade(f, gt, k), oracle::min_ade(of, ogt, k), 1e-9);
    EXPECT_NEAR(fn::min_fde(f, gt, k), oracle::min_fde(of, ogt, k), 1e-9);
    EXPECT_NEAR(fn::brier_min_fde(f, gt, k), oracle::brier_min_fde(of, ogt, k), 1e-9);
    EXPECT_NEAR(fn::miss_rate(f, gt, k), oracle::miss_rate(of, ogt, k), 1e-9);
  }
}

TEST(MultiWorldMetrics, MatchReferenceOnRandomInstances) {
  testutil::Rng rng(0xcafe);
  for (int it = 0; it < 200; ++it) {
    const std::int64_t na = testutil::uniform_int(rng, 1, 4);
    const std::int64_t k_modes = testutil::uniform_int(rng, 1, 6);
    const std::int64_t t = testutil::uniform_int(rng, 1, 10);
    const auto f = testutil::random_forecast(rng, na, k_modes, t);
    const auto gt = testutil::random_targets(rng, na, t);
    const auto want = oracle::multi_world(testutil::to_oracle(f), testutil::to_oracle(gt));
    const auto got = fn::multi_world_metrics(f, gt);

    ASSERT_EQ(got.defined(), want.defined);
    if (!want.defined) continue;
    EXPECT_EQ(got.best_world, want.best_world);
    EXPECT_NEAR(got.avg_min_fde, want.avg_min_fde, 1e-9);
    EXPECT_NEAR(got.avg_min_ade, want.avg_min_ade, 1e-9);
    EXPECT_NEAR(got.avg_brier_min_fde, want.avg_brier_min_fde, 1e-9);
    EXPECT_NEAR(got.actor_mr, want.actor_mr, 1e-9);
    EXPECT_NEAR(got.world_prob, 1.0 / static_cast<double>(k_modes), 1e-12);
  }
}

TEST(MultiWorldMetrics, UndefinedWhenNoAgentHasAValidFinalStep) {
  testutil::Rng rng(5);
  const auto f = testutil::random_forecast(rng, 2, 2, 3);
  auto gt = testutil::random_targets(rng, 2, 3);
  for (std::int64_t a = 0; a < 2; ++a) gt.valid.at(a, 2) = 0.0;
  EXPECT_FALSE(fn::multi_world_metrics(f, gt).defined());
}

TEST(MetricAccumulator, EmptyMeanIsZeroAndMergePools) {
  fn::MetricAccumulator a, b;
  EXPECT_DOUBLE_EQ(a.mean(), 0.0);
  a.add(1.0);
  a.add(3.0);
  b.add(5.0);
  a.merge(b);
  EXPECT_DOUBLE_EQ(a.mean(), 3.0);
  EXPECT_EQ(a.count, 3);
}

}  // namespace

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

#include "futurenet/geom/descriptors.hpp"
#include "futurenet/geom/neighborhoods.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_util.hpp"

namespace fn = futurenet;

namespace {

fn::Anchor random_anchor(testutil::Rng & rng, double span, std::int64_t step = -1) {
  return fn::Anchor{
    testutil::uniform(rng, -span, span), testutil::uniform(rng, -span, span),
    testutil::uniform(rng, -M_PI + 1e-6, M_PI), step};
}

fn::Anchor transformed(const fn::Pose2 & g, const fn::Anchor & a) {
  const fn::Pose2 p = fn::transform_pose(g, fn::Pose2{a.x, a.y, a.heading});
  return fn::Anchor{p.x, p.y, p.heading, a.step};
}

TEST(RelativeDescriptor, InvariantUnderRigidTransforms) {
  testutil::Rng rng(0x5e2);
  for (int it = 0; it < 200; ++it) {
    const fn::Anchor i = random_anchor(rng, 50.0, testutil::uniform_int(rng, 0, 9));
    const fn::Anchor j = random_anchor(rng, 50.0, testutil::uniform_int(rng, 0, 9));
    const fn::Pose2 g{
      testutil::uniform(rng, -100.0, 100.0), testutil::uniform(rng, -100.0, 100.0),
      testutil::uniform(rng, -M_PI + 1e-6, M_PI)};

    const auto base = fn::relative_descriptor(i, j);
    const auto moved = fn::relative_descriptor(transformed(g, i), transformed(g, j));
    EXPECT_NEAR(base.distance, moved.distance, 1e-9);
    EXPECT_NEAR(base.direction, moved.direction, 1e-9);
    EXPECT_NEAR(
      fn::wrap_angle(base.rel_orientation - moved.rel_orientation), 0.0, 1e-9);
    EXPECT_DOUBLE_EQ(base.time_gap, moved.time_gap);
  }
}

TEST(RelativeDescriptor, ExpressesTheOffsetInTheQueryFrame) {
  // Query at the origin facing +y; a key 3 m ahead of it sits at (0, 3).
  const fn::Anchor i{0.0, 0.0, M_PI / 2.0, -1};
  const fn::Anchor j{0.0, 3.0, M_PI / 2.0, -1};
  const auto d = fn::relative_descriptor(i, j);
  EXPECT_NEAR(d.distance, 3.0, 1e-12);
  EXPECT_NEAR(d.direction, 0.0, 1e-12);
  EXPECT_NEAR(d.rel_orientation, 0.0, 1e-12);
}

TEST(RelativeDescriptor, TimeGapOnlyBetweenTimedAnchors) {
  const fn::Anchor timed_a{0.0, 0.0, 0.0, 2};
  const fn::Anchor timed_b{1.0, 0.0, 0.0, 7};
  const fn::Anchor timeless{2.0, 0.0, 0.0, -1};
  EXPECT_DOUBLE_EQ(fn::relative_descriptor(timed_a, timed_b).time_gap, 5.0);
  EXPECT_DOUBLE_EQ(fn::relative_descriptor(timed_a, timeless).time_gap, 0.0);
  EXPECT_DOUBLE_EQ(fn::relative_descriptor(timeless, timed_b).time_gap, 0.0);
}

TEST(DescriptorFeatures, AnglesEnterAsCosSinPairs) {
  testutil::Rng rng(0xfea);
  for (int it = 0; it < 100; ++it) {
    const fn::Anchor i = random_anchor(rng, 20.0, 1);
    const fn::Anchor j = random_anchor(rng, 20.0, 4);
    const double dt = 0.1;
    const auto d = fn::relative_descriptor(i, j);
    const auto f = fn::raw_descriptor_features(i, j, dt);
    EXPECT_NEAR(f[0], d.distance, 1e-9);
    EXPECT_NEAR(f[1], std::cos(d.direction), 1e-9);
    EXPECT_NEAR(f[2], std::sin(d.direction), 1e-9);
    EXPECT_NEAR(f[3], std::cos(d.rel_orientation), 1e-9);
    EXPECT_NEAR(f[4], std::sin(d.rel_orientation), 1e-9);
    EXPECT_NEAR(f[5], d.time_gap * dt, 1e-12);
  }
}

TEST(DescriptorFeatures, CoincidentAnchorsUseTheNeutralBearing) {
  const fn::Anchor i{5.0, -2.0, 1.0, -1};
  const fn::Anchor j{5.0, -2.0, 2.0, -1};
  const auto f = fn::raw_descriptor_features(i, j, 0.1);
  EXPECT_DOUBLE_EQ(f[0], 0.0);
  EXPECT_DOUBLE_EQ(f[1], 1.0);
  EXPECT_DOUBLE_EQ(f[2], 0.0);
}

std::vector<std::vector<std::int64_t>> rows_of(const fn::EdgeList & e) {
  std::vector<std::vector<std::int64_t>> rows(static_cast<std::size_t>(e.n_queries));
  for (std::int64_t q = 0; q < e.n_queries; ++q) {
    for (std::int64_t i = e.offsets[static_cast<std::size_t>(q)];
         i < e.offsets[static_cast<std::size_t>(q) + 1]; ++i) {
      rows[static_cast<std::size_t>(q)].push_back(e.keys[static_cast<std::size_t>(i)]);
      EXPECT_EQ(e.queries[static_cast<std::size_t>(i)], q);
    }
  }
  return rows;
}

TEST(RadiusNeighborhoods, MatchTheQuadraticScan) {
  testutil::Rng rng(0x2ad);
  for (int it = 0; it < 200; ++it) {
    const std::int64_t nq = testutil::uniform_int(rng, 1, 30);
    const std::int64_t nk = testutil::uniform_int(rng, 1, 30);
    std::vector<fn::Anchor> queries, keys;
    std::vector<oracle::Vec2> oq, ok;
    for (std::int64_t i = 0; i < nq; ++i) {
      queries.push_back(random_anchor(rng, 30.0));
      oq.push_back({queries.back().x, queries.back().y});
    }
    for (std::int64_t i = 0; i < nk; ++i) {
      keys.push_back(random_anchor(rng, 30.0));
      ok.push_back({keys.back().x, keys.back().y});
    }
    const double radius = testutil::uniform(rng, 5.0, 40.0);
    const bool exclude = nq == nk && it % 2 == 0;

    const auto got = rows_of(fn::radius_edges(queries, keys, radius, exclude));
    const auto want = oracle::radius_neighbors(oq, ok, radius, exclude);
    EXPECT_EQ(got, want);
  }
}

TEST(RadiusNeighborhoods, BoundaryDistanceIsIncluded) {
  const std::vector<fn::Anchor> q{{0.0, 0.0, 0.0, -1}};
  const std::vector<fn::Anchor> k{{3.0, 4.0, 0.0, -1}};
  EXPECT_EQ(fn::radius_edges(q, k, 5.0).n_edges(), 1);
  EXPECT_EQ(fn::radius_edges(q, k, 4.999999).n_edges(), 0);
}

TEST(CausalNeighborhoods, MatchTheQuadraticScan) {
  testutil::Rng rng(0xca5);
  for (int it = 0; it < 200; ++it) {
    const std::int64_t n = testutil::uniform_int(rng, 1, 20);
    const std::int64_t span = testutil::uniform_int(rng, 1, 12);
    std::vector<bool> valid;
    for (std::int64_t i = 0; i < n; ++i) valid.push_back(testutil::uniform_int(rng, 0, 4) != 0);

    const auto got = rows_of(fn::causal_edges(valid, span));
    const auto want = oracle::causal_neighbors(valid, span);
    EXPECT_EQ(got, want);
  }
}

TEST(CausalNeighborhoods, NeverLookForwardOrBeyondTheSpan) {
  const std::vector<bool> valid(8, true);
  const auto rows = rows_of(fn::causal_edges(valid, 3));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::int64_t j : rows[i]) {
      EXPECT_LT(j, static_cast<std::int64_t>(i));
      EXPECT_LE(static_cast<std::int64_t>(i) - j, 3);
    }
  }
  EXPECT_TRUE(rows[0].empty());
}

TEST(EdgeAssembly, CsrOffsetsPartitionTheEdges) {
  const auto e = fn::make_edges(3, {{0, 1}, {0, 2}, {2, 0}});
  EXPECT_EQ(e.offsets, (std::vector<std::int64_t>{0, 2, 2, 3}));
  EXPECT_EQ(e.keys, (std::vector<std::int64_t>{1, 2, 0}));
  EXPECT_EQ(e.n_edges(), 3);
}

TEST(EdgeDescriptors, OneRowPerEdgeInEdgeOrder) {
  testutil::Rng rng(0xed6e);
  std::vector<fn::Anchor> anchors;
  for (int i = 0; i < 10; ++i) anchors.push_back(random_anchor(rng, 20.0));
  const auto edges = fn::radius_edges(anchors, anchors, 25.0, true);
  const auto feats = fn::edge_descriptor_features(anchors, anchors, edges, 0.1);
  ASSERT_EQ(feats.dim(0), edges.n_edges());
  ASSERT_EQ(feats.dim(1), fn::kDescriptorDim);
  for (std::int64_t e = 0; e < edges.n_edges(); ++e) {
    const auto want = fn::raw_descriptor_features(
      anchors[static_cast<std::size_t>(edges.queries[static_cast<std::size_t>(e)])],
      anchors[static_cast<std::size_t>(edges.keys[static_cast<std::size_t>(e)])], 0.1);
    for (int j = 0; j < fn::kDescriptorDim; ++j) {
      EXPECT_NEAR(feats.at(e, j), want[static_cast<std::size_t>(j)], 1e-12);
    }
  }
}

}  // namespace

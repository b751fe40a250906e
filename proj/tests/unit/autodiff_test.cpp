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

#include "futurenet/core/graph.hpp"

#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "finite_diff.hpp"
#include "test_util.hpp"

namespace fn = futurenet;

namespace {

using Builder =
  std::function<fn::Var(fn::Graph<double> &, const std::vector<fn::Var> &)>;

fn::Tensor<double> random_tensor(
  testutil::Rng & rng, fn::Shape shape, double lo, double hi) {
  fn::Tensor<double> t = fn::Tensor<double>::zeros(shape);
  for (std::int64_t i = 0; i < t.numel(); ++i) t.data()[i] = testutil::uniform(rng, lo, hi);
  return t;
}

/// Reduce any output to a scalar with fixed random weights so every output
/// element influences the check.
fn::Var weighted_sum(fn::Graph<double> & g, fn::Var out, testutil::Rng & rng) {
  fn::Tensor<double> w = fn::Tensor<double>::zeros(g.value(out).shape());
  for (std::int64_t i = 0; i < w.numel(); ++i) w.data()[i] = testutil::uniform(rng, -1.0, 1.0);
  return g.dot_const(out, std::move(w));
}

/// Analytic leaf gradients vs central differences through a fresh forward
/// pass per probe. Seeds the scalar-reduction weights identically both ways.
void expect_gradients_match(
  std::vector<fn::Tensor<double>> leaves, const Builder & build, double tol = 1e-6) {
  const auto run = [&](std::vector<double> * flat_grads) {
    fn::Graph<double> g;
    std::vector<fn::Var> vars;
    vars.reserve(leaves.size());
    for (const auto & t : leaves) vars.push_back(g.leaf(t));
    testutil::Rng wrng(0x5ca1a);
    fn::Var scalar = weighted_sum(g, build(g, vars), wrng);
    if (flat_grads != nullptr) {
      g.backward(scalar);
      for (fn::Var v : vars) {
        const auto & grad = g.grad(v);
        for (std::int64_t i = 0; i < grad.numel(); ++i) flat_grads->push_back(grad.data()[i]);
      }
    }
    return g.value(scalar).data()[0];
  };

  std::vector<double> analytic;
  run(&analytic);

  std::vector<double *> slots;
  for (auto & t : leaves) {
    for (std::int64_t i = 0; i < t.numel(); ++i) slots.push_back(&t.data()[i]);
  }
  const auto estimate =
    oracle::finite_difference_grad([&]() { return run(nullptr); }, slots);

  ASSERT_EQ(analytic.size(), estimate.size());
  EXPECT_LT(oracle::max_relative_error(analytic, estimate), tol);
}

TEST(Gradients, ElementwiseArithmetic) {
  testutil::Rng rng(1);
  const auto a = random_tensor(rng, {3, 4}, -2.0, 2.0);
  const auto b = random_tensor(rng, {3, 4}, 0.5, 2.0);
  expect_gradients_match({a, b}, [](auto & g, const auto & v) { return g.add(v[0], v[1]); });
  expect_gradients_match({a, b}, [](auto & g, const auto & v) { return g.sub(v[0], v[1]); });
  expect_gradients_match({a, b}, [](auto & g, const auto & v) { return g.mul(v[0], v[1]); });
  expect_gradients_match({a, b}, [](auto & g, const auto & v) { return g.div(v[0], v[1]); });
  expect_gradients_match({a}, [](auto & g, const auto & v) { return g.scale(v[0], -1.7); });
  expect_gradients_match({a}, [](auto & g, const auto & v) { return g.add_scalar(v[0], 3.0); });
}

TEST(Gradients, SmoothNonlinearities) {
  testutil::Rng rng(2);
  const auto x = random_tensor(rng, {4, 3}, -2.0, 2.0);
  const auto pos = random_tensor(rng, {4, 3}, 0.4, 3.0);
  expect_gradients_match({x}, [](auto & g, const auto & v) { return g.gelu(v[0]); });
  expect_gradients_match({x}, [](auto & g, const auto & v) { return g.sigmoid(v[0]); });
  expect_gradients_match({x}, [](auto & g, const auto & v) { return g.tanhv(v[0]); });
  expect_gradients_match({x}, [](auto & g, const auto & v) { return g.softplus(v[0]); });
  expect_gradients_match({x}, [](auto & g, const auto & v) { return g.expv(v[0]); });
  expect_gradients_match({pos}, [](auto & g, const auto & v) { return g.logv(v[0]); });
  expect_gradients_match({pos}, [](auto & g, const auto & v) { return g.sqrtv(v[0]); });
}

TEST(Gradients, KinkedOpsAwayFromTheirKinks) {
  testutil::Rng rng(3);
  // Keep every input at least 0.1 from the kink so h = 1e-5 probes stay on
  // one side.
  fn::Tensor<double> x = random_tensor(rng, {3, 3}, 0.1, 2.0);
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    if (i % 2 == 0) x.data()[i] = -x.data()[i];
  }
  expect_gradients_match({x}, [](auto & g, const auto & v) { return g.absv(v[0]); });

  const auto interior = random_tensor(rng, {3, 3}, -0.8, 0.8);
  expect_gradients_match(
    {interior}, [](auto & g, const auto & v) { return g.clampv(v[0], -1.0, 1.0); });

  // Saturated inputs must receive exactly zero gradient.
  fn::Graph<double> g;
  fn::Tensor<double> sat = fn::Tensor<double>::zeros({1, 2});
  sat.at(0, 0) = 5.0;
  sat.at(0, 1) = -5.0;
  fn::Var leaf = g.leaf(sat);
  g.backward(g.sum_all(g.clampv(leaf, -1.0, 1.0)));
  EXPECT_EQ(g.grad(leaf).at(0, 0), 0.0);
  EXPECT_EQ(g.grad(leaf).at(0, 1), 0.0);
}

TEST(Gradients, MatrixProducts) {
  testutil::Rng rng(4);
  const auto a = random_tensor(rng, {3, 4}, -1.0, 1.0);
  const auto b = random_tensor(rng, {4, 2}, -1.0, 1.0);
  expect_gradients_match({a, b}, [](auto & g, const auto & v) { return g.matmul(v[0], v[1]); });

  const auto x = random_tensor(rng, {3, 4}, -1.0, 1.0);
  const auto w = random_tensor(rng, {5, 4}, -1.0, 1.0);
  const auto bias = random_tensor(rng, {5}, -1.0, 1.0);
  expect_gradients_match(
    {x, w, bias}, [](auto & g, const auto & v) { return g.linear(v[0], v[1], v[2]); });
}

TEST(Gradients, LayerNorm) {
  testutil::Rng rng(5);
  const auto x = random_tensor(rng, {4, 6}, -2.0, 2.0);
  const auto gamma = random_tensor(rng, {6}, 0.5, 1.5);
  const auto beta = random_tensor(rng, {6}, -0.5, 0.5);
  expect_gradients_match(
    {x, gamma, beta}, [](auto & g, const auto & v) { return g.layer_norm(v[0], v[1], v[2]); },
    1e-5);
}

TEST(Gradients, IndexingAndShaping) {
  testutil::Rng rng(6);
  const auto x = random_tensor(rng, {5, 3}, -1.0, 1.0);
  const auto y = random_tensor(rng, {2, 3}, -1.0, 1.0);
  const auto z = random_tensor(rng, {5, 2}, -1.0, 1.0);
  expect_gradients_match(
    {x}, [](auto & g, const auto & v) { return g.gather_rows(v[0], {4, 0, 0, 2}); });
  expect_gradients_match(
    {x}, [](auto & g, const auto & v) { return g.row_mask(v[0], {1.0, 0.0, 0.5, 1.0, 0.0}); });
  expect_gradients_match(
    {x, y}, [](auto & g, const auto & v) { return g.concat_rows(v[0], v[1]); });
  expect_gradients_match(
    {x, z}, [](auto & g, const auto & v) { return g.concat_cols(v[0], v[1]); });
  expect_gradients_match(
    {x}, [](auto & g, const auto & v) { return g.slice_rows(v[0], 1, 4); });
  expect_gradients_match(
    {x}, [](auto & g, const auto & v) { return g.slice_cols(v[0], 1, 3); });
  expect_gradients_match(
    {x}, [](auto & g, const auto & v) { return g.reshape(v[0], {3, 5}); });
}

TEST(Gradients, RowDistributions) {
  testutil::Rng rng(7);
  const auto x = random_tensor(rng, {4, 5}, -2.0, 2.0);
  expect_gradients_match({x}, [](auto & g, const auto & v) { return g.softmax_rows(v[0]); });
  expect_gradients_match({x}, [](auto & g, const auto & v) { return g.log_softmax_rows(v[0]); });
  expect_gradients_match({x}, [](auto & g, const auto & v) { return g.logsumexp_rows(v[0]); });
  expect_gradients_match({x}, [](auto & g, const auto & v) { return g.sum_all(v[0]); });
  expect_gradients_match({x}, [](auto & g, const auto & v) { return g.mean_all(v[0]); });
}

TEST(Gradients, SparseAttentionCore) {
  testutil::Rng rng(8);
  // 3 queries with segments of 2, 0, and 3 edges; 2 heads over dim 4.
  const std::vector<std::int64_t> offsets{0, 2, 2, 5};
  const auto q = random_tensor(rng, {5, 4}, -1.0, 1.0);
  const auto k = random_tensor(rng, {5, 4}, -1.0, 1.0);
  const auto v = random_tensor(rng, {5, 4}, -1.0, 1.0);
  expect_gradients_match(
    {q, k, v},
    [&offsets](auto & g, const auto & leaves) {
      fn::Var logits = g.head_dot(leaves[0], leaves[1], 2);
      fn::Var attn = g.segment_softmax(logits, offsets);
      return g.attention_pool(attn, leaves[2], offsets, 3);
    },
    1e-5);
}

TEST(Gradients, AccumulateAcrossSharedSubexpressions) {
  // One leaf feeding two branches must receive the sum of both branch
  // gradients.
  testutil::Rng rng(9);
  const auto x = random_tensor(rng, {2, 2}, 0.5, 1.5);
  expect_gradients_match({x}, [](auto & g, const auto & v) {
    return g.add(g.mul(v[0], v[0]), g.logv(v[0]));
  });
}

TEST(Backward, RequiresAScalar) {
  fn::Graph<double> g;
  fn::Var x = g.leaf(fn::Tensor<double>::zeros({2, 2}));
  EXPECT_THROW(g.backward(x), fn::NumericError);
}

TEST(Gradients, QuadraticToyLossIsExact) {
  // d/dx sum(x^2) = 2x, so the harness itself is sanity-checked to 1e-8.
  fn::Tensor<double> x = fn::Tensor<double>::zeros({3});
  x.data()[0] = 1.0;
  x.data()[1] = -2.0;
  x.data()[2] = 0.5;

  std::vector<double *> slots{&x.data()[0], &x.data()[1], &x.data()[2]};
  const auto f = [&]() {
    double s = 0.0;
    for (std::int64_t i = 0; i < 3; ++i) s += x.data()[i] * x.data()[i];
    return s;
  };
  const auto grad = oracle::finite_difference_grad(f, slots);
  for (std::int64_t i = 0; i < 3; ++i) EXPECT_NEAR(grad[static_cast<std::size_t>(i)], 2.0 * x.data()[i], 1e-8);

  const auto zero = oracle::finite_difference_grad([]() { return 0.0; }, slots);
  for (double v : zero) EXPECT_DOUBLE_EQ(v, 0.0);
}

}  // namespace

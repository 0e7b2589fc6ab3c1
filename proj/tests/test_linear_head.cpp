/*
 * Copyright 2026 The vbhead Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "vbhead/linear_head.hpp"

using namespace vbhead;
using namespace vbhead::testing;

namespace {

// Central differences of task_loss over every weight and bias entry.
LinearGradient numeric_gradient(Link link, const Eigen::MatrixXd& w, const Eigen::VectorXd& b, const Batch& batch,
                                double h = 1e-5) {
  LinearGradient g{Eigen::MatrixXd::Zero(w.rows(), w.cols()), Eigen::VectorXd::Zero(b.size())};
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    Eigen::MatrixXd plus = w, minus = w;
    plus.data()[i] += h;
    minus.data()[i] -= h;
    g.d_weights.data()[i] = (task_loss(link, plus, b, batch) - task_loss(link, minus, b, batch)) / (2 * h);
  }
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    Eigen::VectorXd plus = b, minus = b;
    plus(i) += h;
    minus(i) -= h;
    g.d_bias(i) = (task_loss(link, w, plus, batch) - task_loss(link, w, minus, batch)) / (2 * h);
  }
  return g;
}

DenseLinearHead constant_head(Link link, Eigen::Index d, Eigen::Index k, double bias) {
  DenseLinearHead h;
  h.link = link;
  h.weights = Eigen::MatrixXd::Zero(k, d);
  h.bias = Eigen::VectorXd::Constant(k, bias);
  return h;
}

}  // namespace

TEST(LinearHead, ZeroInputGivesBiasLogits) {
  Rng rng(1);
  const auto head = random_dense_head(Link::softmax, 4, 3, rng);
  const ForwardResult r = forward(head, Eigen::VectorXd::Zero(4));
  EXPECT_EQ(r.logits, head.bias);
}

TEST(LinearHead, EqualLogitsGiveUniformSoftmax) {
  const auto head = constant_head(Link::softmax, 2, 5, 3.7);
  const ForwardResult r = forward(head, Eigen::VectorXd::Ones(2));
  for (Eigen::Index j = 0; j < 5; ++j) EXPECT_NEAR(r.outputs(j), 0.2, 1e-15);
}

TEST(LinearHead, SigmoidOfZeroIsHalf) {
  const auto head = constant_head(Link::sigmoid, 3, 2, 0.0);
  const ForwardResult r = forward(head, Eigen::VectorXd::Ones(3));
  EXPECT_EQ(r.outputs(0), 0.5);
  EXPECT_EQ(r.outputs(1), 0.5);
}

TEST(LinearHead, SoftmaxSumsToOneAndIsShiftInvariant) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::MatrixXd z = random_matrix(3, 4, rng, 20.0);
    const Eigen::MatrixXd p = apply_link(Link::softmax, z);
    const double c = rng.uniform(-500.0, 500.0);
    const Eigen::MatrixXd shifted = apply_link(Link::softmax, (z.array() + c).matrix());
    for (Eigen::Index i = 0; i < 3; ++i) {
      EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-9);
      EXPECT_GT(p.row(i).minCoeff(), 0.0);
    }
    EXPECT_LT((p - shifted).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(LinearHead, UniformOutputsGiveLogK) {
  Rng rng(3);
  const auto head = constant_head(Link::softmax, 3, 4, 0.0);
  const Batch batch = random_batch(Link::softmax, 10, 3, 4, rng);
  EXPECT_NEAR(loss(head, batch), std::log(4.0), 1e-12);
  EXPECT_NEAR(loss(head, batch), 1.386294, 1e-6);
  const auto binary = constant_head(Link::softmax, 3, 2, 0.0);
  EXPECT_NEAR(loss(binary, random_batch(Link::softmax, 7, 3, 2, rng)), 0.693147, 1e-6);
}

TEST(LinearHead, PerfectRegressionFitHasZeroLossAndGradient) {
  Rng rng(4);
  const auto head = random_dense_head(Link::sigmoid, 3, 2, rng);
  Batch batch;
  batch.task = TaskKind::regression;
  batch.x = random_matrix(6, 3, rng);
  batch.targets = forward_batch(head, batch.x);
  EXPECT_NEAR(loss(head, batch), 0.0, 1e-30);
  const LinearGradient g = loss_gradient(head, batch);
  EXPECT_EQ(g.d_weights.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(g.d_bias.cwiseAbs().maxCoeff(), 0.0);
}

TEST(LinearHead, UniformBinaryLogitGradientIsPMinusOneHot) {
  const auto head = constant_head(Link::softmax, 1, 2, 0.0);
  Batch batch;
  batch.x = Eigen::MatrixXd::Zero(1, 1);
  batch.labels = {0};
  const LinearGradient g = loss_gradient(head, batch);
  // With x = 0 the bias gradient equals the logit gradient.
  EXPECT_DOUBLE_EQ(g.d_bias(0), -0.5);
  EXPECT_DOUBLE_EQ(g.d_bias(1), 0.5);
}

TEST(LinearHead, GradientMatchesFiniteDifferences) {
  Rng rng(5);
  const auto head = random_dense_head(Link::softmax, 5, 3, rng);
  const Batch batch = random_batch(Link::softmax, 4, 5, 3, rng);
  const LinearGradient g = loss_gradient(head, batch);
  const LinearGradient fd = numeric_gradient(head.link, head.weights, head.bias, batch);
  EXPECT_LT(max_relative_error(g.d_weights, fd.d_weights), 1e-4);
  EXPECT_LT(max_relative_error(g.d_bias, fd.d_bias), 1e-4);
}

TEST(LinearHead, GradientMatchesFiniteDifferencesOnRandomInstances) {
  Rng rng(6);
  for (int trial = 0; trial < 60; ++trial) {
    const Link link = trial % 2 == 0 ? Link::softmax : Link::sigmoid;
    const auto d = static_cast<Eigen::Index>(1 + trial % 6);
    const auto k = static_cast<Eigen::Index>((link == Link::softmax ? 2 : 1) + trial % 3);
    const auto head = random_dense_head(link, d, k, rng);
    const Batch batch = random_batch(link, 1 + trial % 5, d, k, rng);
    const LinearGradient g = loss_gradient(head, batch);
    const LinearGradient fd = numeric_gradient(link, head.weights, head.bias, batch);
    EXPECT_LT(max_relative_error(g.d_weights, fd.d_weights), 1e-4) << "trial " << trial;
    EXPECT_LT(max_relative_error(g.d_bias, fd.d_bias), 1e-4) << "trial " << trial;
  }
}

TEST(LinearHead, LossIsInvariantUnderBatchPermutation) {
  Rng rng(7);
  for (Link link : {Link::softmax, Link::sigmoid}) {
    const auto head = random_dense_head(link, 3, 3, rng);
    const Batch batch = random_batch(link, 9, 3, 3, rng);
    std::vector<Eigen::Index> order(9);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng.engine());
    Batch permuted = batch;
    for (Eigen::Index i = 0; i < 9; ++i) {
      permuted.x.row(i) = batch.x.row(order[i]);
      if (link == Link::softmax) {
        permuted.labels[i] = batch.labels[order[i]];
      } else {
        permuted.targets.row(i) = batch.targets.row(order[i]);
      }
    }
    EXPECT_NEAR(loss(head, batch), loss(head, permuted), 1e-12);
  }
}

TEST(LinearHead, LossRejectsBadBatches) {
  Rng rng(8);
  const auto head = random_dense_head(Link::softmax, 3, 2, rng);
  Batch empty;
  empty.x.resize(0, 3);
  EXPECT_THROW(loss(head, empty), Error);
  EXPECT_THROW(loss(head, random_batch(Link::sigmoid, 2, 3, 2, rng)), Error);
  EXPECT_THROW(loss(head, random_batch(Link::softmax, 2, 4, 2, rng)), Error);
  EXPECT_THROW(forward(head, Eigen::VectorXd::Zero(2)), Error);
}

TEST(LinearHead, PriorExtractionExamples) {
  DenseLinearHead ones;
  ones.weights = Eigen::MatrixXd::Ones(2, 2);
  ones.bias = Eigen::VectorXd::Ones(2);
  const ScalarGaussianPrior p1 = extract_prior(ones);
  EXPECT_EQ(p1.mean, 1.0);
  EXPECT_EQ(p1.std, 1e-6);

  DenseLinearHead pair;
  pair.weights = Eigen::MatrixXd(1, 1);
  pair.weights << 0.0;
  pair.bias = Eigen::VectorXd::Constant(1, 2.0);
  const ScalarGaussianPrior p2 = extract_prior(pair);
  EXPECT_NEAR(p2.mean, 1.0, 1e-15);
  EXPECT_NEAR(p2.std, 1.414214, 1e-6);

  DenseLinearHead three;
  three.weights = Eigen::MatrixXd(1, 2);
  three.weights << -1.0, 1.0;
  three.bias = Eigen::VectorXd::Zero(1);
  const ScalarGaussianPrior p3 = extract_prior(three);
  EXPECT_NEAR(p3.mean, 0.0, 1e-15);
  EXPECT_NEAR(p3.std, 1.0, 1e-15);

  DenseLinearHead single;
  single.weights = Eigen::MatrixXd(1, 0);
  single.bias = Eigen::VectorXd::Zero(1);
  EXPECT_THROW(extract_prior(single), Error);
}

TEST(LinearHead, CheckpointJsonRoundTrips) {
  Rng rng(9);
  auto head = random_dense_head(Link::sigmoid, 4, 2, rng);
  head.trained_on = {{"train", "x.csv"}};
  const DenseLinearHead back = dense_head_from_json(to_json(head));
  EXPECT_EQ(back.link, head.link);
  EXPECT_EQ(back.weights, head.weights);
  EXPECT_EQ(back.bias, head.bias);
  EXPECT_EQ(back.trained_on, head.trained_on);
  EXPECT_THROW(dense_head_from_json({{"type", "bayes_linear"}}), Error);
}

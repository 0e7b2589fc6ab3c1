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

#pragma once

#include <string_view>

#include <Eigen/Dense>
#include <json.hpp>

#include "vbhead/common.hpp"
#include "vbhead/dataset.hpp"

namespace vbhead {

enum class Link { softmax, sigmoid };

std::string_view to_string(Link link);
Link parse_link(std::string_view text);
// softmax <-> classification, sigmoid <-> regression.
TaskKind task_for(Link link);
Link link_for(TaskKind task);

// Point-estimate linear output layer: z = W x + b, outputs = link(z).
struct DenseLinearHead {
  Link link = Link::softmax;
  Eigen::MatrixXd weights;  // k_out x d
  Eigen::VectorXd bias;     // k_out
  nlohmann::json trained_on = nlohmann::json::object();

  Eigen::Index d() const { return weights.cols(); }
  Eigen::Index k_out() const { return weights.rows(); }
  TaskKind task() const { return task_for(link); }
};

struct ScalarGaussianPrior {
  double mean = 0.0;
  double std = 1.0;
};

struct LinearGradient {
  Eigen::MatrixXd d_weights;
  Eigen::VectorXd d_bias;
};

struct ForwardResult {
  Eigen::VectorXd logits;
  Eigen::VectorXd outputs;
};

// Row-wise link on an n x K logit matrix. Softmax subtracts the row max.
Eigen::MatrixXd apply_link(Link link, const Eigen::MatrixXd& logits);

ForwardResult forward(const DenseLinearHead& head, const Eigen::VectorXd& x);
// n x K outputs for an n x d input matrix.
Eigen::MatrixXd forward_batch(const DenseLinearHead& head, const Eigen::MatrixXd& x);

// Task loss for explicit parameters; the Bayesian head evaluates it on
// sampled weights. Classification: mean NLL (natural log). Regression: MSE
// of sigmoid outputs averaged over batch and outputs.
double task_loss(Link link, const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                 const Batch& batch);
LinearGradient task_loss_gradient(Link link, const Eigen::MatrixXd& weights,
                                  const Eigen::VectorXd& bias, const Batch& batch);

double loss(const DenseLinearHead& head, const Batch& batch);
LinearGradient loss_gradient(const DenseLinearHead& head, const Batch& batch);

// Mean and sample standard deviation over all weight and bias entries
// pooled together; the std is floored at 1e-6.
ScalarGaussianPrior extract_prior(const DenseLinearHead& head);

nlohmann::json to_json(const DenseLinearHead& head);
DenseLinearHead dense_head_from_json(const nlohmann::json& j);

}  // namespace vbhead

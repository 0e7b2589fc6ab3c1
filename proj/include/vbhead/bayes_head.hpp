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

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "vbhead/common.hpp"
#include "vbhead/dataset.hpp"
#include "vbhead/linear_head.hpp"

namespace vbhead {

// Mean-field Gaussian posterior over a linear layer. Every weight and bias
// entry i has q_i = N(mu_i, softplus(rho_i)^2); the prior is one scalar
// Gaussian shared by all entries.
struct GaussianVariationalHead {
  Link link = Link::softmax;
  Eigen::MatrixXd mu_w;   // k_out x d
  Eigen::MatrixXd rho_w;  // k_out x d
  Eigen::VectorXd mu_b;   // k_out
  Eigen::VectorXd rho_b;  // k_out
  ScalarGaussianPrior prior;
  std::uint64_t seed = 0;

  Eigen::Index d() const { return mu_w.cols(); }
  Eigen::Index k_out() const { return mu_w.rows(); }
  TaskKind task() const { return task_for(link); }
};

// Standard-normal draws with the head's parameter shapes.
struct WeightNoise {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
};

struct WeightSample {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
  WeightNoise epsilon;
};

double softplus(double rho);
double inverse_softplus(double sigma);
double logistic(double x);

WeightNoise draw_noise(const GaussianVariationalHead& head, Rng& rng);
// w = mu + softplus(rho) * epsilon, elementwise.
WeightSample reparameterize(const GaussianVariationalHead& head, const WeightNoise& epsilon);
WeightSample sample_weights(const GaussianVariationalHead& head, Rng& rng);

double kl_to_prior(const GaussianVariationalHead& head);

struct ElboTerms {
  double total = 0.0;
  double data_term = 0.0;
  double kl_term = 0.0;
};

struct VariationalGradient {
  Eigen::MatrixXd mu_w;
  Eigen::MatrixXd rho_w;
  Eigen::VectorXd mu_b;
  Eigen::VectorXd rho_b;
};

struct ElboEvaluation {
  ElboTerms terms;
  VariationalGradient gradient;
};

// Negative ELBO up to constants: mean task loss over the draws plus
// kl_weight * KL(q || prior). The draws are shared by value and gradient.
ElboEvaluation elbo_value_and_gradient(const GaussianVariationalHead& head, const Batch& batch,
                                       std::span<const WeightNoise> draws, double kl_weight);
ElboTerms elbo_loss(const GaussianVariationalHead& head, const Batch& batch,
                    std::span<const WeightNoise> draws, double kl_weight);
ElboTerms elbo_loss(const GaussianVariationalHead& head, const Batch& batch, int mc_samples,
                    double kl_weight, Rng& rng);
VariationalGradient elbo_gradient(const GaussianVariationalHead& head, const Batch& batch,
                                  int mc_samples, double kl_weight, Rng& rng);

// mu = prior mean + U(-jitter, jitter); every sigma = sigma_init.
GaussianVariationalHead init_from_prior(Eigen::Index d, Eigen::Index k_out, Link link,
                                        const ScalarGaussianPrior& prior, double sigma_init,
                                        std::uint64_t seed, double jitter = 0.01);

struct MeanPrediction {
  Eigen::VectorXd mean;     // k_out
  Eigen::MatrixXd samples;  // num_samples x k_out
};

MeanPrediction predict_mean(const GaussianVariationalHead& head, const Eigen::VectorXd& x,
                            int num_samples, Rng& rng);

// Point-estimate head at the posterior means.
DenseLinearHead mean_head(const GaussianVariationalHead& head);

nlohmann::json to_json(const GaussianVariationalHead& head);
GaussianVariationalHead bayes_head_from_json(const nlohmann::json& j);

}  // namespace vbhead

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

#include "vbhead/bayes_head.hpp"

#include <cmath>
#include <string>

#include "flat_arrays.hpp"

namespace vbhead {

double softplus(double rho) {
  if (rho > 30.0) return rho + std::log1p(std::exp(-rho));
  return std::log1p(std::exp(rho));
}

double inverse_softplus(double sigma) {
  if (!(sigma > 0.0)) throw Error("inverse_softplus needs a positive argument");
  if (sigma > 30.0) return sigma + std::log(-std::expm1(-sigma));
  return std::log(std::expm1(sigma));
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

Eigen::MatrixXd softplus_of(const Eigen::MatrixXd& rho) {
  return rho.unaryExpr([](double r) { return softplus(r); });
}

Eigen::MatrixXd logistic_of(const Eigen::MatrixXd& rho) {
  return rho.unaryExpr([](double r) { return logistic(r); });
}

void check_prior(const ScalarGaussianPrior& prior) {
  if (!(prior.std > 0.0) || !std::isfinite(prior.std) || !std::isfinite(prior.mean)) {
    throw Error("prior needs a finite mean and a positive finite std");
  }
}

// Sum over entries of KL(N(mu, softplus(rho)^2) || N(m0, s0^2)).
double kl_block(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& rho, const ScalarGaussianPrior& p) {
  const double two_var0 = 2.0 * (p.std * p.std);
  double total = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double sigma = softplus(rho.data()[i]);
    const double diff = mu.data()[i] - p.mean;
    total += std::log(p.std / sigma) + (sigma * sigma + diff * diff) / two_var0 - 0.5;
  }
  return total;
}

}  // namespace

WeightNoise draw_noise(const GaussianVariationalHead& head, Rng& rng) {
  WeightNoise eps;
  eps.w.resize(head.k_out(), head.d());
  eps.b.resize(head.k_out());
  for (Eigen::Index r = 0; r < eps.w.rows(); ++r)
    for (Eigen::Index c = 0; c < eps.w.cols(); ++c) eps.w(r, c) = rng.normal();
  for (Eigen::Index r = 0; r < eps.b.size(); ++r) eps.b(r) = rng.normal();
  return eps;
}

WeightSample reparameterize(const GaussianVariationalHead& head, const WeightNoise& epsilon) {
  WeightSample s;
  s.w = head.mu_w + softplus_of(head.rho_w).cwiseProduct(epsilon.w);
  s.b = head.mu_b + softplus_of(head.rho_b).cwiseProduct(epsilon.b);
  s.epsilon = epsilon;
  return s;
}

WeightSample sample_weights(const GaussianVariationalHead& head, Rng& rng) {
  return reparameterize(head, draw_noise(head, rng));
}

double kl_to_prior(const GaussianVariationalHead& head) {
  check_prior(head.prior);
  return kl_block(head.mu_w, head.rho_w, head.prior) + kl_block(head.mu_b, head.rho_b, head.prior);
}

ElboEvaluation elbo_value_and_gradient(const GaussianVariationalHead& head, const Batch& batch,
                                       std::span<const WeightNoise> draws, double kl_weight) {
  if (draws.empty()) throw Error("at least one Monte-Carlo draw is required");
  if (!(kl_weight >= 0.0)) throw Error("kl_weight must be nonnegative");
  if (batch.size() == 0) throw Error("empty batch");

  const Eigen::MatrixXd sig_rho_w = logistic_of(head.rho_w);
  const Eigen::VectorXd sig_rho_b = logistic_of(head.rho_b);

  ElboEvaluation out;
  VariationalGradient& g = out.gradient;
  g.mu_w = Eigen::MatrixXd::Zero(head.k_out(), head.d());
  g.rho_w = Eigen::MatrixXd::Zero(head.k_out(), head.d());
  g.mu_b = Eigen::VectorXd::Zero(head.k_out());
  g.rho_b = Eigen::VectorXd::Zero(head.k_out());

  const double inv_s = 1.0 / static_cast<double>(draws.size());
  double data = 0.0;
  for (const WeightNoise& eps : draws) {
    const WeightSample s = reparameterize(head, eps);
    data += task_loss(head.link, s.w, s.b, batch);
    const LinearGradient lg = task_loss_gradient(head.link, s.w, s.b, batch);
    g.mu_w += lg.d_weights;
    g.mu_b += lg.d_bias;
    g.rho_w += lg.d_weights.cwiseProduct(eps.w).cwiseProduct(sig_rho_w);
    g.rho_b += lg.d_bias.cwiseProduct(eps.b).cwiseProduct(sig_rho_b);
  }
  g.mu_w *= inv_s;
  g.mu_b *= inv_s;
  g.rho_w *= inv_s;
  g.rho_b *= inv_s;

  out.terms.data_term = data * inv_s;
  out.terms.kl_term = kl_to_prior(head);
  out.terms.total = out.terms.data_term + kl_weight * out.terms.kl_term;

  if (kl_weight > 0.0) {
    const double m0 = head.prior.mean;
    const double var0 = head.prior.std * head.prior.std;
    const auto kl_rho = [var0](const Eigen::MatrixXd& rho) {
      return rho.unaryExpr([var0](double r) {
        const double sigma = softplus(r);
        return (sigma / var0 - 1.0 / sigma) * logistic(r);
      });
    };
    g.mu_w += kl_weight * ((head.mu_w.array() - m0) / var0).matrix();
    g.mu_b += kl_weight * ((head.mu_b.array() - m0) / var0).matrix();
    g.rho_w += kl_weight * kl_rho(head.rho_w);
    g.rho_b += kl_weight * kl_rho(head.rho_b);
  }
  return out;
}

ElboTerms elbo_loss(const GaussianVariationalHead& head, const Batch& batch,
                    std::span<const WeightNoise> draws, double kl_weight) {
  if (draws.empty()) throw Error("at least one Monte-Carlo draw is required");
  if (!(kl_weight >= 0.0)) throw Error("kl_weight must be nonnegative");
  ElboTerms t;
  for (const WeightNoise& eps : draws) {
    const WeightSample s = reparameterize(head, eps);
    t.data_term += task_loss(head.link, s.w, s.b, batch);
  }
  t.data_term /= static_cast<double>(draws.size());
  t.kl_term = kl_to_prior(head);
  t.total = t.data_term + kl_weight * t.kl_term;
  return t;
}

namespace {

std::vector<WeightNoise> draw_many(const GaussianVariationalHead& head, int count, Rng& rng) {
  if (count < 1) throw Error("mc_samples must be at least 1");
  std::vector<WeightNoise> draws;
  draws.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) draws.push_back(draw_noise(head, rng));
  return draws;
}

}  // namespace

ElboTerms elbo_loss(const GaussianVariationalHead& head, const Batch& batch, int mc_samples,
                    double kl_weight, Rng& rng) {
  return elbo_loss(head, batch, draw_many(head, mc_samples, rng), kl_weight);
}

VariationalGradient elbo_gradient(const GaussianVariationalHead& head, const Batch& batch,
                                  int mc_samples, double kl_weight, Rng& rng) {
  return elbo_value_and_gradient(head, batch, draw_many(head, mc_samples, rng), kl_weight).gradient;
}

GaussianVariationalHead init_from_prior(Eigen::Index d, Eigen::Index k_out, Link link,
                                        const ScalarGaussianPrior& prior, double sigma_init,
                                        std::uint64_t seed, double jitter) {
  if (d < 0 || k_out <= 0) throw Error("invalid head dimensions");
  check_prior(prior);
  if (!(sigma_init > 0.0) || !std::isfinite(sigma_init)) throw Error("sigma_init must be positive");
  if (!(jitter >= 0.0)) throw Error("jitter must be nonnegative");

  GaussianVariationalHead head;
  head.link = link;
  head.prior = prior;
  head.seed = seed;
  Rng rng(seed);
  const auto perturb = [&] { return jitter > 0.0 ? prior.mean + rng.uniform(-jitter, jitter) : prior.mean; };
  head.mu_w = Eigen::MatrixXd(k_out, d);
  for (Eigen::Index r = 0; r < k_out; ++r)
    for (Eigen::Index c = 0; c < d; ++c) head.mu_w(r, c) = perturb();
  head.mu_b = Eigen::VectorXd(k_out);
  for (Eigen::Index r = 0; r < k_out; ++r) head.mu_b(r) = perturb();
  const double rho = inverse_softplus(sigma_init);
  head.rho_w = Eigen::MatrixXd::Constant(k_out, d, rho);
  head.rho_b = Eigen::VectorXd::Constant(k_out, rho);
  return head;
}

MeanPrediction predict_mean(const GaussianVariationalHead& head, const Eigen::VectorXd& x,
                            int num_samples, Rng& rng) {
  if (num_samples < 1) throw Error("num_samples must be at least 1");
  if (x.size() != head.d()) throw Error("input dimension mismatch");
  if (!x.allFinite()) throw Error("input contains non-finite values");

  MeanPrediction out;
  Eigen::MatrixXd logits(num_samples, head.k_out());
  for (int s = 0; s < num_samples; ++s) {
    const WeightSample w = sample_weights(head, rng);
    logits.row(s) = (w.w * x + w.b).transpose();
  }
  out.samples = apply_link(head.link, logits);
  // Sequential reduction over the draw index.
  out.mean = Eigen::VectorXd::Zero(head.k_out());
  for (int s = 0; s < num_samples; ++s) out.mean += out.samples.row(s).transpose();
  out.mean /= static_cast<double>(num_samples);
  return out;
}

DenseLinearHead mean_head(const GaussianVariationalHead& head) {
  DenseLinearHead h;
  h.link = head.link;
  h.weights = head.mu_w;
  h.bias = head.mu_b;
  return h;
}

nlohmann::json to_json(const GaussianVariationalHead& head) {
  return {{"type", "bayes_linear"},
          {"link", std::string(to_string(head.link))},
          {"d", head.d()},
          {"k_out", head.k_out()},
          {"mu_w", detail::flatten_rows(head.mu_w)},
          {"rho_w", detail::flatten_rows(head.rho_w)},
          {"mu_b", detail::to_vector(head.mu_b)},
          {"rho_b", detail::to_vector(head.rho_b)},
          {"prior", {{"m0", head.prior.mean}, {"s0", head.prior.std}}},
          {"seed", head.seed}};
}

GaussianVariationalHead bayes_head_from_json(const nlohmann::json& j) {
  try {
    if (j.at("type").get<std::string>() != "bayes_linear") throw Error("not a bayes_linear checkpoint");
    GaussianVariationalHead head;
    head.link = parse_link(j.at("link").get<std::string>());
    const auto d = j.at("d").get<Eigen::Index>();
    const auto k = j.at("k_out").get<Eigen::Index>();
    if (d < 0 || k <= 0) throw Error("invalid checkpoint dimensions");
    head.mu_w = detail::matrix_from_flat(j.at("mu_w").get<std::vector<double>>(), k, d);
    head.rho_w = detail::matrix_from_flat(j.at("rho_w").get<std::vector<double>>(), k, d);
    head.mu_b = detail::matrix_from_flat(j.at("mu_b").get<std::vector<double>>(), k, 1);
    head.rho_b = detail::matrix_from_flat(j.at("rho_b").get<std::vector<double>>(), k, 1);
    head.prior.mean = j.at("prior").at("m0").get<double>();
    head.prior.std = j.at("prior").at("s0").get<double>();
    check_prior(head.prior);
    head.seed = j.at("seed").get<std::uint64_t>();
    return head;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid bayes_linear checkpoint: ") + e.what());
  }
}

}  // namespace vbhead

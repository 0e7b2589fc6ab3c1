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

#include "vbhead/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "vbhead/bayes_head.hpp"
#include "vbhead/metrics.hpp"

namespace vbhead {

HeadKind parse_head_kind(std::string_view text) {
  if (text == "linear") return HeadKind::linear;
  if (text == "bayes") return HeadKind::bayes;
  throw Error("unknown head kind '" + std::string(text) + "' (expected linear or bayes)");
}

SelectionMetric parse_selection_metric(std::string_view text) {
  if (text == "uar") return SelectionMetric::uar;
  if (text == "spearman") return SelectionMetric::spearman;
  if (text == "loss") return SelectionMetric::loss;
  throw Error("unknown selection metric '" + std::string(text) + "'");
}

std::string_view to_string(SelectionMetric metric) {
  switch (metric) {
    case SelectionMetric::uar: return "uar";
    case SelectionMetric::spearman: return "spearman";
    case SelectionMetric::loss: return "loss";
  }
  return "?";
}

void validate(const TrainConfig& c) {
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
    throw Error("learning_rate must be finite and nonnegative");
  }
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw Error("momentum must lie in [0,1)");
  if (c.epochs < 1) throw Error("epochs must be positive");
  if (c.batch_size < 1) throw Error("batch_size must be positive");
  if (c.mc_samples < 1) throw Error("mc_samples must be positive");
  if (c.eval_samples < 1) throw Error("eval_samples must be positive");
  if (c.kl_weight && !(*c.kl_weight >= 0.0 && std::isfinite(*c.kl_weight))) {
    throw Error("kl_weight must be finite and nonnegative");
  }
  if (c.sigma_init && !(*c.sigma_init > 0.0 && std::isfinite(*c.sigma_init))) {
    throw Error("sigma_init must be positive");
  }
}

nlohmann::json to_json(const TrainReport& report, bool include_timing) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const EpochStats& e : report.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"data_term", e.data_term},
                      {"kl_term", e.kl_term},
                      {"dev_metric", e.dev_metric}});
  }
  nlohmann::json j = {{"initial_train_loss", report.initial_train_loss},
                      {"epochs", epochs},
                      {"best_epoch", report.best_epoch},
                      {"kl_weight", report.kl_weight},
                      {"selection_metric", std::string(to_string(report.selection))}};
  if (include_timing) j["wall_clock_seconds"] = report.wall_clock_seconds;
  return j;
}

double selection_score(SelectionMetric metric, const PredictionTable& predictions,
                       const EmbeddingDataset& dataset) {
  const MetricReport report = evaluate(predictions, dataset);
  const auto* cls = std::get_if<ClassificationReport>(&report);
  const auto* reg = std::get_if<RegressionReport>(&report);
  switch (metric) {
    case SelectionMetric::uar:
      if (!cls) throw Error("uar selection needs a classification task");
      return cls->uar;
    case SelectionMetric::spearman:
      if (!reg) throw Error("spearman selection needs a regression task");
      return reg->spearman.mean;
    case SelectionMetric::loss:
      return cls ? cls->nll : reg->mse;
  }
  throw std::logic_error("unhandled selection metric");
}

namespace {

// Fixed stream ids derived from the run seed.
enum Stream : std::uint64_t { kInitStream = 0, kShuffleStream = 1, kNoiseStream = 2, kObjectiveStream = 3, kDevStream = 4 };

bool improves(SelectionMetric metric, double candidate, double best) {
  return metric == SelectionMetric::loss ? candidate < best : candidate > best;
}

void momentum_step(Eigen::MatrixXd& param, Eigen::MatrixXd& velocity, const Eigen::MatrixXd& grad,
                   const TrainConfig& c) {
  velocity = c.momentum * velocity - c.learning_rate * grad;
  param += velocity;
}

void momentum_step(Eigen::VectorXd& param, Eigen::VectorXd& velocity, const Eigen::VectorXd& grad,
                   const TrainConfig& c) {
  velocity = c.momentum * velocity - c.learning_rate * grad;
  param += velocity;
}

[[noreturn]] void diverged(int epoch, std::size_t batch) {
  throw Error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) +
              "; try a smaller learning rate");
}

std::vector<WeightNoise> objective_draws(const GaussianVariationalHead& head, const TrainConfig& c) {
  Rng rng(c.seed, kObjectiveStream);
  std::vector<WeightNoise> draws;
  for (int s = 0; s < c.eval_samples; ++s) draws.push_back(draw_noise(head, rng));
  return draws;
}

// Trains one parameterization. `Model` supplies the objective, the
// minibatch step and the conversion to AnyHead.
struct LinearModel {
  DenseLinearHead head;
  Eigen::MatrixXd v_w;
  Eigen::VectorXd v_b;

  ElboTerms objective(const Batch& batch, const TrainConfig&, double) const {
    const double l = loss(head, batch);
    return {l, l, 0.0};
  }
  double step(const Batch& batch, const TrainConfig& c, double, Rng&) {
    const double l = loss(head, batch);
    const LinearGradient g = loss_gradient(head, batch);
    momentum_step(head.weights, v_w, g.d_weights, c);
    momentum_step(head.bias, v_b, g.d_bias, c);
    return l;
  }
  AnyHead snapshot() const { return head; }
};

struct BayesModel {
  GaussianVariationalHead head;
  Eigen::MatrixXd v_mu_w, v_rho_w;
  Eigen::VectorXd v_mu_b, v_rho_b;

  ElboTerms objective(const Batch& batch, const TrainConfig& c, double kl_weight) const {
    return elbo_loss(head, batch, objective_draws(head, c), kl_weight);
  }
  double step(const Batch& batch, const TrainConfig& c, double kl_weight, Rng& noise) {
    std::vector<WeightNoise> draws;
    for (int s = 0; s < c.mc_samples; ++s) draws.push_back(draw_noise(head, noise));
    const ElboEvaluation ev = elbo_value_and_gradient(head, batch, draws, kl_weight);
    momentum_step(head.mu_w, v_mu_w, ev.gradient.mu_w, c);
    momentum_step(head.rho_w, v_rho_w, ev.gradient.rho_w, c);
    momentum_step(head.mu_b, v_mu_b, ev.gradient.mu_b, c);
    momentum_step(head.rho_b, v_rho_b, ev.gradient.rho_b, c);
    return ev.terms.total;
  }
  AnyHead snapshot() const { return head; }
};

template <class Model>
TrainResult run(Model model, const EmbeddingDataset& train_set, const EmbeddingDataset& dev_set,
                const TrainConfig& c, SelectionMetric selection) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = train_set.size();
  const std::size_t batch_size = static_cast<std::size_t>(c.batch_size);
  const std::size_t num_batches = (n + batch_size - 1) / batch_size;
  const double kl_weight = c.kl_weight.value_or(1.0 / static_cast<double>(num_batches));
  const Batch full = make_batch(train_set);
  const std::uint64_t dev_seed = Rng(c.seed, kDevStream).engine()();

  TrainResult result{model.snapshot(), {}};
  TrainReport& report = result.report;
  report.kl_weight = kl_weight;
  report.selection = selection;
  report.initial_train_loss = model.objective(full, c, kl_weight).total;

  Rng shuffle_rng(c.seed, kShuffleStream);
  Rng noise_rng(c.seed, kNoiseStream);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::optional<double> best;

  for (int epoch = 1; epoch <= c.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    for (std::size_t b = 0; b < num_batches; ++b) {
      const std::size_t lo = b * batch_size;
      const std::size_t hi = std::min(n, lo + batch_size);
      const Batch batch = make_batch(train_set, std::span(order).subspan(lo, hi - lo));
      const double value = model.step(batch, c, kl_weight, noise_rng);
      if (!std::isfinite(value)) diverged(epoch, b);
    }

    const ElboTerms obj = model.objective(full, c, kl_weight);
    if (!std::isfinite(obj.total)) diverged(epoch, num_batches);
    const AnyHead current = model.snapshot();
    const double dev_metric = selection_score(selection, predict_table(current, dev_set, c.eval_samples, dev_seed), dev_set);
    report.epochs.push_back({epoch, obj.total, obj.data_term, obj.kl_term, dev_metric});
    if (!best || improves(selection, dev_metric, *best)) {
      best = dev_metric;
      report.best_epoch = epoch;
      result.head = current;
    }
  }
  report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace

TrainResult train(HeadKind kind, const EmbeddingDataset& train_set, const EmbeddingDataset& dev_set,
                  const TrainConfig& config, const DenseLinearHead* prior_source) {
  validate(config);
  if (train_set.size() == 0) throw Error("training set is empty");
  if (dev_set.size() == 0) throw Error("dev set is empty");
  if (train_set.task != dev_set.task || train_set.num_features != dev_set.num_features ||
      train_set.num_outputs != dev_set.num_outputs) {
    throw Error("train and dev sets have incompatible shapes");
  }
  const SelectionMetric selection = config.selection.value_or(
      train_set.task == TaskKind::classification ? SelectionMetric::uar : SelectionMetric::spearman);
  const auto d = static_cast<Eigen::Index>(train_set.num_features);
  const auto k = static_cast<Eigen::Index>(train_set.num_outputs);
  const Link link = link_for(train_set.task);

  if (kind == HeadKind::linear) {
    LinearModel model;
    model.head.link = link;
    model.head.trained_on = train_set.provenance;
    Rng init(config.seed, kInitStream);
    model.head.weights.resize(k, d);
    for (Eigen::Index r = 0; r < k; ++r)
      for (Eigen::Index col = 0; col < d; ++col) model.head.weights(r, col) = init.uniform(-0.01, 0.01);
    model.head.bias = Eigen::VectorXd::Zero(k);
    model.v_w = Eigen::MatrixXd::Zero(k, d);
    model.v_b = Eigen::VectorXd::Zero(k);
    return run(std::move(model), train_set, dev_set, config, selection);
  }

  ScalarGaussianPrior prior;
  if (prior_source) {
    if (prior_source->d() != d || prior_source->k_out() != k || prior_source->link != link) {
      throw Error("prior source head does not match the training data shape");
    }
    prior = extract_prior(*prior_source);
  } else if (config.prior) {
    prior = *config.prior;
  } else {
    throw Error("a bayes head needs a prior: pass a trained linear checkpoint or an explicit mean/std");
  }
  BayesModel model;
  model.head = init_from_prior(d, k, link, prior, config.sigma_init.value_or(prior.std), config.seed);
  model.v_mu_w = model.v_rho_w = Eigen::MatrixXd::Zero(k, d);
  model.v_mu_b = model.v_rho_b = Eigen::VectorXd::Zero(k);
  return run(std::move(model), train_set, dev_set, config, selection);
}

}  // namespace vbhead

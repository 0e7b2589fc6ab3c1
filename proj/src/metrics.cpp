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

#include "vbhead/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <string>
#include <unordered_map>

namespace vbhead {

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts) n += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return n;
}

ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted, int num_classes) {
  if (truth.size() != predicted.size()) throw Error("truth and prediction lengths differ");
  if (truth.empty()) throw Error("no examples to evaluate");
  if (num_classes < 1) throw Error("num_classes must be positive");
  ConfusionMatrix cm;
  cm.counts.assign(static_cast<std::size_t>(num_classes), std::vector<std::size_t>(static_cast<std::size_t>(num_classes), 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= num_classes || predicted[i] < 0 || predicted[i] >= num_classes) {
      throw Error("class index out of range at position " + std::to_string(i));
    }
    ++cm.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  return cm;
}

double uar(std::span<const int> truth, std::span<const int> predicted, int num_classes) {
  const ConfusionMatrix cm = confusion_matrix(truth, predicted, num_classes);
  double sum = 0.0;
  for (std::size_t c = 0; c < cm.counts.size(); ++c) {
    const auto& row = cm.counts[c];
    const std::size_t support = std::accumulate(row.begin(), row.end(), std::size_t{0});
    if (support == 0) {
      throw Error("class " + std::to_string(c) + " does not occur in the evaluation set; recall undefined");
    }
    sum += static_cast<double>(row[c]) / static_cast<double>(support);
  }
  return sum / static_cast<double>(num_classes);
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 (0-based) share rank mean((i+1)..j)
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = rank;
    i = j;
  }
  return ranks;
}

namespace {

// NaN when either side is constant.
double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) return std::nan("");
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

}  // namespace

SpearmanResult spearman_rho(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& targets) {
  if (predicted.rows() != targets.rows() || predicted.cols() != targets.cols()) {
    throw Error("prediction and target shapes differ");
  }
  if (predicted.rows() < 2) throw Error("Spearman's rho needs at least 2 examples");
  if (predicted.cols() < 1) throw Error("Spearman's rho needs at least one output dimension");

  SpearmanResult out;
  const auto n = static_cast<std::size_t>(predicted.rows());
  std::vector<double> p(n), t(n);
  for (Eigen::Index m = 0; m < predicted.cols(); ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = predicted(static_cast<Eigen::Index>(i), m);
      t[i] = targets(static_cast<Eigen::Index>(i), m);
    }
    double rho = pearson(fractional_ranks(p), fractional_ranks(t));
    if (std::isnan(rho)) {
      std::cerr << "warning: output dimension " << m << " has zero rank variance; rho recorded as 0\n";
      out.degenerate_dims.push_back(static_cast<std::size_t>(m));
      rho = 0.0;
    }
    out.per_dim.push_back(rho);
  }
  out.mean = std::accumulate(out.per_dim.begin(), out.per_dim.end(), 0.0) /
             static_cast<double>(out.per_dim.size());
  return out;
}

MetricReport evaluate(const PredictionTable& predictions, const EmbeddingDataset& dataset) {
  validate(predictions);
  if (predictions.kind != table_kind_for(dataset.task)) {
    throw Error("prediction table kind does not match the dataset task");
  }
  if (predictions.k_out() != static_cast<Eigen::Index>(dataset.num_outputs)) {
    throw Error("prediction width does not match the dataset");
  }
  if (predictions.size() != static_cast<Eigen::Index>(dataset.size())) {
    throw Error("prediction table and dataset differ in size");
  }
  std::unordered_map<std::string, Eigen::Index> row_of;
  for (std::size_t i = 0; i < predictions.ids.size(); ++i) row_of.emplace(predictions.ids[i], static_cast<Eigen::Index>(i));

  const auto n = static_cast<Eigen::Index>(dataset.size());
  Eigen::MatrixXd outputs(n, predictions.k_out());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& id = dataset.records[static_cast<std::size_t>(i)].id;
    const auto it = row_of.find(id);
    if (it == row_of.end()) throw Error("no prediction for id '" + id + "'");
    outputs.row(i) = predictions.outputs.row(it->second);
  }

  if (dataset.task == TaskKind::classification) {
    std::vector<int> truth;
    truth.reserve(dataset.size());
    for (const Record& r : dataset.records) truth.push_back(r.label);
    const std::vector<int> predicted = argmax_rows(outputs);
    const int k = static_cast<int>(dataset.num_outputs);

    ClassificationReport rep;
    rep.confusion = confusion_matrix(truth, predicted, k);
    rep.uar = uar(truth, predicted, k);
    std::size_t hits = 0;
    double nll = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      hits += truth[i] == predicted[i] ? 1 : 0;
      nll -= std::log(std::max(outputs(static_cast<Eigen::Index>(i), truth[i]), kNllProbabilityFloor));
    }
    rep.accuracy = static_cast<double>(hits) / static_cast<double>(truth.size());
    rep.nll = nll / static_cast<double>(truth.size());
    return rep;
  }

  Eigen::MatrixXd targets(n, outputs.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = dataset.records[static_cast<std::size_t>(i)].targets;
    for (Eigen::Index m = 0; m < targets.cols(); ++m) targets(i, m) = t[static_cast<std::size_t>(m)];
  }
  RegressionReport rep;
  rep.spearman = spearman_rho(outputs, targets);
  rep.mse = (outputs - targets).squaredNorm() / static_cast<double>(outputs.size());
  return rep;
}

nlohmann::json to_json(const MetricReport& report) {
  if (const auto* c = std::get_if<ClassificationReport>(&report)) {
    return {{"uar", c->uar}, {"accuracy", c->accuracy}, {"nll", c->nll}, {"confusion", c->confusion.counts}};
  }
  const auto& r = std::get<RegressionReport>(report);
  return {{"spearman_mean", r.spearman.mean},
          {"spearman_per_dim", r.spearman.per_dim},
          {"degenerate_dims", r.spearman.degenerate_dims},
          {"mse", r.mse}};
}

}  // namespace vbhead

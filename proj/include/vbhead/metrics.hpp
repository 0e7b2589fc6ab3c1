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

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "vbhead/dataset.hpp"
#include "vbhead/prediction_table.hpp"

namespace vbhead {

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const;
};

ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted, int num_classes);

// Unweighted average recall: mean over classes of per-class recall. Every
// class in [0, num_classes) must occur in `truth`.
double uar(std::span<const int> truth, std::span<const int> predicted, int num_classes);

// 1-based ranks; tied values share the average of their positions.
std::vector<double> fractional_ranks(std::span<const double> values);

struct SpearmanResult {
  std::vector<double> per_dim;
  double mean = 0.0;
  // Dimensions where either side had zero rank variance; scored as 0.
  std::vector<std::size_t> degenerate_dims;
};

// Column-wise Spearman rho between two n x M matrices (n >= 2).
SpearmanResult spearman_rho(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& targets);

struct ClassificationReport {
  double uar = 0.0;
  double accuracy = 0.0;
  double nll = 0.0;
  ConfusionMatrix confusion;
};

struct RegressionReport {
  SpearmanResult spearman;
  double mse = 0.0;
};

using MetricReport = std::variant<ClassificationReport, RegressionReport>;

// Matches table rows to dataset records by id.
MetricReport evaluate(const PredictionTable& predictions, const EmbeddingDataset& dataset);

nlohmann::json to_json(const MetricReport& report);

// Probabilities are floored here before taking the log so indicator
// predictions (majority vote) give a finite NLL.
inline constexpr double kNllProbabilityFloor = 1e-15;

}  // namespace vbhead

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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "vbhead/bayes_head.hpp"
#include "vbhead/dataset.hpp"

namespace vbhead {

inline constexpr int kDefaultSampleCount = 500;
inline constexpr int kCurvePoints = 201;
inline constexpr double kStdFloor = 1e-6;

// Monte-Carlo output distribution for a single example.
struct PredictionDistribution {
  Eigen::MatrixXd sampled_outputs;  // S x k_out
  Eigen::VectorXd mean_outputs;
  int predicted_class = 0;
  double confidence = 0.0;  // max of mean_outputs
};

PredictionDistribution predict_distribution(const GaussianVariationalHead& head, const Eigen::VectorXd& x,
                                            int num_samples, Rng& rng);

struct GaussianFit {
  double mean = 0.0;
  double std = 0.0;  // sample std, 0 for a single value
  std::size_t count = 0;
};

GaussianFit fit_gaussian(std::span<const double> values);

// Normal density N(mean, std^2) at x.
double pdf_point(double mean, double std, double x);

struct DensityCurve {
  std::vector<double> x;
  std::vector<double> density;
};

// `points` evenly spaced abscissae over [lo, hi]; std floored at kStdFloor.
DensityCurve density_curve(const GaussianFit& fit, double lo = 0.0, double hi = 1.0, int points = kCurvePoints);

struct UncertaintyReport {
  int num_samples = 0;
  std::vector<double> correct;
  std::vector<double> wrong;
  std::optional<GaussianFit> correct_fit;
  std::optional<GaussianFit> wrong_fit;
  std::optional<DensityCurve> correct_curve;
  std::optional<DensityCurve> wrong_curve;
  // mean_correct - mean_wrong and var_wrong / var_correct; both sets needed.
  std::optional<double> separation;
  std::optional<double> variance_ratio;
  bool single_sided = false;
};

// Example i draws its weights from Rng(seed, i); aggregation runs in
// example order.
UncertaintyReport analyze(const GaussianVariationalHead& head, const EmbeddingDataset& dataset,
                          int num_samples, std::uint64_t seed);

nlohmann::json to_json(const UncertaintyReport& report);
// CSV "set,x,density" with set in {correct, wrong}.
void write_curves_csv(const UncertaintyReport& report, const std::filesystem::path& path);
std::string render_svg(const UncertaintyReport& report);

}  // namespace vbhead

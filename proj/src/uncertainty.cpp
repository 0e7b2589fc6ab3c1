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

#include "vbhead/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace vbhead {

PredictionDistribution predict_distribution(const GaussianVariationalHead& head, const Eigen::VectorXd& x,
                                            int num_samples, Rng& rng) {
  MeanPrediction mp = predict_mean(head, x, num_samples, rng);
  PredictionDistribution out;
  out.sampled_outputs = std::move(mp.samples);
  out.mean_outputs = std::move(mp.mean);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < out.mean_outputs.size(); ++k) {
    if (out.mean_outputs(k) > out.mean_outputs(best)) best = k;
  }
  out.predicted_class = static_cast<int>(best);
  out.confidence = out.mean_outputs(best);
  return out;
}

GaussianFit fit_gaussian(std::span<const double> values) {
  if (values.empty()) throw Error("cannot fit a Gaussian to an empty set");
  GaussianFit fit;
  fit.count = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  fit.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - fit.mean) * (v - fit.mean);
    fit.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return fit;
}

double pdf_point(double mean, double std, double x) {
  if (!std::isfinite(x)) throw Error("pdf_point: x must be finite");
  if (!(std > 0.0)) throw Error("pdf_point: std must be positive");
  const double z = (x - mean) / std;
  return std::exp(-0.5 * z * z) / (std * std::sqrt(2.0 * std::numbers::pi));
}

DensityCurve density_curve(const GaussianFit& fit, double lo, double hi, int points) {
  if (points < 2 || !(hi > lo)) throw Error("density curve needs at least 2 points over a nonempty range");
  const double std = std::max(fit.std, kStdFloor);
  DensityCurve curve;
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (int i = 0; i < points; ++i) {
    const double x = i + 1 == points ? hi : lo + step * static_cast<double>(i);
    curve.x.push_back(x);
    curve.density.push_back(pdf_point(fit.mean, std, x));
  }
  return curve;
}

UncertaintyReport analyze(const GaussianVariationalHead& head, const EmbeddingDataset& dataset,
                          int num_samples, std::uint64_t seed) {
  if (num_samples < 2) throw Error("uncertainty analysis needs at least 2 samples");
  if (head.link != Link::softmax || dataset.task != TaskKind::classification) {
    throw Error("uncertainty analysis supports classification heads only");
  }
  if (head.d() != static_cast<Eigen::Index>(dataset.num_features) ||
      head.k_out() != static_cast<Eigen::Index>(dataset.num_outputs)) {
    throw Error("checkpoint shape does not match the dataset");
  }

  UncertaintyReport report;
  report.num_samples = num_samples;
  Eigen::VectorXd x(head.d());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Record& r = dataset.records[i];
    for (std::size_t j = 0; j < r.features.size(); ++j) x(static_cast<Eigen::Index>(j)) = r.features[j];
    Rng rng(seed, i);
    const PredictionDistribution dist = predict_distribution(head, x, num_samples, rng);
    (dist.predicted_class == r.label ? report.correct : report.wrong).push_back(dist.confidence);
  }

  if (!report.correct.empty()) {
    report.correct_fit = fit_gaussian(report.correct);
    report.correct_curve = density_curve(*report.correct_fit);
  }
  if (!report.wrong.empty()) {
    report.wrong_fit = fit_gaussian(report.wrong);
    report.wrong_curve = density_curve(*report.wrong_fit);
  }
  report.single_sided = report.correct.empty() || report.wrong.empty();
  if (!report.single_sided) {
    report.separation = report.correct_fit->mean - report.wrong_fit->mean;
    const double var_floor = kStdFloor * kStdFloor;
    const double var_correct = std::max(report.correct_fit->std * report.correct_fit->std, var_floor);
    const double var_wrong = std::max(report.wrong_fit->std * report.wrong_fit->std, var_floor);
    report.variance_ratio = var_wrong / var_correct;
  }
  return report;
}

namespace {

nlohmann::json fit_json(const std::optional<GaussianFit>& fit) {
  if (!fit) return nullptr;
  return {{"mean", fit->mean}, {"std", fit->std}, {"count", fit->count}};
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const UncertaintyReport& report) {
  nlohmann::json curves = nlohmann::json::object();
  if (report.correct_curve) curves["correct"] = report.correct_curve->density;
  if (report.wrong_curve) curves["wrong"] = report.wrong_curve->density;
  if (report.correct_curve || report.wrong_curve) {
    curves["x"] = (report.correct_curve ? report.correct_curve : report.wrong_curve)->x;
  }
  return {{"num_samples", report.num_samples},
          {"num_examples", report.correct.size() + report.wrong.size()},
          {"correct_confidences", report.correct},
          {"wrong_confidences", report.wrong},
          {"fits", {{"correct", fit_json(report.correct_fit)}, {"wrong", fit_json(report.wrong_fit)}}},
          {"pdf_curves", curves},
          {"separation", optional_json(report.separation)},
          {"variance_ratio", optional_json(report.variance_ratio)},
          {"single_sided", report.single_sided}};
}

void write_curves_csv(const UncertaintyReport& report, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "set,x,density\n";
  const auto emit = [&](const char* name, const std::optional<DensityCurve>& curve) {
    if (!curve) return;
    for (std::size_t i = 0; i < curve->x.size(); ++i) {
      out << name << ',' << format_real(curve->x[i]) << ',' << format_real(curve->density[i]) << '\n';
    }
  };
  emit("correct", report.correct_curve);
  emit("wrong", report.wrong_curve);
  if (!out) throw Error("failed writing " + path.string());
}

std::string render_svg(const UncertaintyReport& report) {
  constexpr double kWidth = 640, kHeight = 360, kLeft = 50, kRight = 20, kTop = 20, kBottom = 40;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  double y_max = 0.0;
  for (const auto* c : {&report.correct_curve, &report.wrong_curve}) {
    if (*c) y_max = std::max(y_max, *std::max_element((*c)->density.begin(), (*c)->density.end()));
  }
  if (!(y_max > 0.0)) y_max = 1.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << kTop + plot_h << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double x = kLeft + plot_w * t / 4.0;
    svg << "<text x=\"" << x << "\" y=\"" << kHeight - 15 << "\" font-size=\"12\" text-anchor=\"middle\">"
        << format_real(t / 4.0) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 2
      << "\" font-size=\"12\" text-anchor=\"middle\">confidence</text>\n";

  const auto polyline = [&](const std::optional<DensityCurve>& curve, const char* colour) {
    if (!curve) return;
    svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curve->x.size(); ++i) {
      const double px = kLeft + plot_w * curve->x[i];
      const double py = kTop + plot_h * (1.0 - curve->density[i] / y_max);
      svg << (i ? " " : "") << format_real(px) << ',' << format_real(py);
    }
    svg << "\"/>\n";
  };
  polyline(report.correct_curve, "#1f77b4");
  polyline(report.wrong_curve, "#d62728");

  svg << "<rect x=\"" << kLeft + 10 << "\" y=\"" << kTop + 5 << "\" width=\"12\" height=\"12\" fill=\"#1f77b4\"/>\n"
      << "<text x=\"" << kLeft + 28 << "\" y=\"" << kTop + 16 << "\" font-size=\"12\">correct (n="
      << report.correct.size() << ")</text>\n"
      << "<rect x=\"" << kLeft + 10 << "\" y=\"" << kTop + 23 << "\" width=\"12\" height=\"12\" fill=\"#d62728\"/>\n"
      << "<text x=\"" << kLeft + 28 << "\" y=\"" << kTop + 34 << "\" font-size=\"12\">wrong (n="
      << report.wrong.size() << ")</text>\n"
      << "</svg>\n";
  return svg.str();
}

}  // namespace vbhead

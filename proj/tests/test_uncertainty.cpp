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

#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_util.hpp"
#include "vbhead/model.hpp"
#include "vbhead/trainer.hpp"
#include "vbhead/uncertainty.hpp"

using namespace vbhead;
using namespace vbhead::testing;

namespace {

double trapezoid(const DensityCurve& c) {
  double area = 0.0;
  for (std::size_t i = 1; i < c.x.size(); ++i) area += 0.5 * (c.density[i] + c.density[i - 1]) * (c.x[i] - c.x[i - 1]);
  return area;
}

}  // namespace

TEST(Pdf, ReferenceValues) {
  const double mode = 1.0 / std::sqrt(2.0 * M_PI);
  EXPECT_NEAR(pdf_point(0.0, 1.0, 0.0), 0.398942, 1e-6);
  EXPECT_NEAR(pdf_point(0.0, 1.0, 1.0), mode * 0.606531, 1e-6);
  EXPECT_NEAR(pdf_point(0.0, 1.0, -1.0), mode * std::exp(-0.5), 1e-15);
  EXPECT_NEAR(pdf_point(0.9, 0.05, 0.9), 7.97885, 1e-5);
  EXPECT_THROW(pdf_point(0.0, 1.0, NAN), Error);
  EXPECT_THROW(pdf_point(0.0, 0.0, 0.0), Error);
}

TEST(Pdf, SymmetricAboutTheMean) {
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    // Dyadic values keep m + d and m - d exact, so the inputs really are mirror images.
    const double m = std::ldexp(std::floor(rng.uniform(-1024, 1024)), -10);
    const double d = std::ldexp(std::floor(rng.uniform(0, 3072)), -10);
    const double s = rng.uniform(0.01, 2);
    EXPECT_EQ(pdf_point(m, s, m + d), pdf_point(m, s, m - d));
    EXPECT_NEAR(pdf_point(m, s, m + d), oracle::normal_pdf(m, s, m + d), 1e-12 * oracle::normal_pdf(m, s, m));
  }
}

TEST(Pdf, CurveIntegratesToOneOverSixSigma) {
  for (const GaussianFit fit : {GaussianFit{0.7, 0.05, 10}, GaussianFit{0.55, 0.2, 10}, GaussianFit{0.0, 3.0, 10}}) {
    const DensityCurve c = density_curve(fit, fit.mean - 6 * fit.std, fit.mean + 6 * fit.std, kCurvePoints);
    EXPECT_NEAR(trapezoid(c), 1.0, 1e-3);
  }
  const DensityCurve unit = density_curve({0.5, 0.1, 3});
  EXPECT_EQ(unit.x.size(), 201u);
  EXPECT_EQ(unit.x.front(), 0.0);
  EXPECT_EQ(unit.x.back(), 1.0);
}

TEST(Fit, SampleMomentsAndFloor) {
  const std::vector<double> v{0.5, 0.7, 0.9};
  const GaussianFit f = fit_gaussian(v);
  EXPECT_NEAR(f.mean, 0.7, 1e-15);
  EXPECT_NEAR(f.std, 0.2, 1e-15);
  EXPECT_EQ(f.count, 3u);
  const std::vector<double> one{0.8};
  EXPECT_EQ(fit_gaussian(one).std, 0.0);
  EXPECT_NO_THROW(density_curve(fit_gaussian(one)));
  EXPECT_THROW(fit_gaussian(std::vector<double>{}), Error);
}

TEST(Uncertainty, CollapsedPosteriorGivesDeterministicConfidences) {
  Rng rng(2);
  auto h = random_bayes_head(Link::softmax, 3, 3, rng);
  h.rho_w.setConstant(-60.0);
  h.rho_b.setConstant(-60.0);
  const Eigen::VectorXd x = random_vector(3, rng);
  const PredictionDistribution p = predict_distribution(h, x, 9, rng);
  for (Eigen::Index s = 1; s < 9; ++s) EXPECT_EQ(p.sampled_outputs.row(s), p.sampled_outputs.row(0));
  EXPECT_NEAR(p.confidence, forward(mean_head(h), x).outputs.maxCoeff(), 1e-12);
}

TEST(Uncertainty, AllCorrectIsSingleSided) {
  const EmbeddingDataset ds = generate_synthetic({SyntheticSpec::Kind::blobs, 40, 4, 2, 10.0, 0.3, 3});
  TrainConfig c;
  c.seed = 3;
  const auto lin = train(HeadKind::linear, ds, ds, c);
  const auto bay = train(HeadKind::bayes, ds, ds, c, &std::get<DenseLinearHead>(lin.head));
  const UncertaintyReport r = analyze(std::get<GaussianVariationalHead>(bay.head), ds, 50, 3);
  EXPECT_TRUE(r.single_sided);
  EXPECT_TRUE(r.wrong.empty());
  EXPECT_FALSE(r.wrong_fit.has_value());
  EXPECT_FALSE(r.separation.has_value());
  EXPECT_TRUE(r.correct_curve.has_value());
  const auto j = to_json(r);
  EXPECT_TRUE(j.at("single_sided").get<bool>());
  EXPECT_TRUE(j.at("separation").is_null());
}

TEST(Uncertainty, ReportIsAPureFunctionOfItsInputs) {
  Rng rng(4);
  const auto h = random_bayes_head(Link::softmax, 4, 3, rng);
  const EmbeddingDataset ds = generate_synthetic({SyntheticSpec::Kind::blobs, 60, 4, 3, 1.0, 1.0, 4});
  const UncertaintyReport a = analyze(h, ds, 30, 5);
  const UncertaintyReport b = analyze(h, ds, 30, 5);
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_NE(to_json(analyze(h, ds, 30, 6)), to_json(a));
  EXPECT_EQ(a.correct.size() + a.wrong.size(), ds.size());
  for (double c : a.correct) EXPECT_GT(c, 0.0);
}

TEST(Uncertainty, SeparationOnOverlappingBlobs) {
  const EmbeddingDataset all = generate_synthetic({SyntheticSpec::Kind::blobs, 1000, 16, 2, 1.5, 1.0, 7});
  const auto [tr, dev] = split_by_fraction(all, 0.2, 7);
  TrainConfig c;
  c.seed = 7;
  const auto lin = train(HeadKind::linear, tr, dev, c);
  const auto bay = train(HeadKind::bayes, tr, dev, c, &std::get<DenseLinearHead>(lin.head));
  const UncertaintyReport r = analyze(std::get<GaussianVariationalHead>(bay.head), dev, 100, 7);
  ASSERT_TRUE(r.separation.has_value());
  EXPECT_GT(*r.separation, 0.0);
}

TEST(Uncertainty, Errors) {
  Rng rng(5);
  const auto h = random_bayes_head(Link::softmax, 2, 2, rng);
  const EmbeddingDataset ds = tiny_classification(4, 2, 2);
  EXPECT_THROW(analyze(h, ds, 1, 0), Error);
  const auto reg = random_bayes_head(Link::sigmoid, 2, 2, rng);
  EXPECT_THROW(analyze(reg, ds, 10, 0), Error);
}

TEST(Uncertainty, CurvesCsvAndSvg) {
  TempDir dir("unc");
  Rng rng(6);
  const auto h = random_bayes_head(Link::softmax, 4, 3, rng);
  const EmbeddingDataset ds = generate_synthetic({SyntheticSpec::Kind::blobs, 60, 4, 3, 1.0, 1.0, 4});
  const UncertaintyReport r = analyze(h, ds, 20, 1);
  write_curves_csv(r, dir / "c.csv");
  const std::string csv = read_file(dir / "c.csv");
  EXPECT_EQ(csv.rfind("set,x,density\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * kCurvePoints);
  const std::string svg = render_svg(r);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("correct"), std::string::npos);
  EXPECT_NE(svg.find("wrong"), std::string::npos);
}

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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <unistd.h>

#include <Eigen/Dense>

#include "vbhead/bayes_head.hpp"
#include "vbhead/common.hpp"
#include "vbhead/dataset.hpp"
#include "vbhead/linear_head.hpp"

namespace vbhead::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("vbhead_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  }
  return m;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, Rng& rng, double scale = 1.0) {
  return random_matrix(n, 1, rng, scale).col(0);
}

// Random batch for the given link: class labels for softmax, targets in (0,1) for sigmoid.
inline Batch random_batch(Link link, Eigen::Index n, Eigen::Index d, Eigen::Index k, Rng& rng) {
  Batch batch;
  batch.task = task_for(link);
  batch.x = random_matrix(n, d, rng);
  if (link == Link::softmax) {
    for (Eigen::Index i = 0; i < n; ++i) {
      batch.labels.push_back(static_cast<int>(rng.uniform(0.0, static_cast<double>(k))) % static_cast<int>(k));
    }
  } else {
    batch.targets.resize(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) batch.targets(i, j) = rng.uniform(0.05, 0.95);
    }
  }
  return batch;
}

inline DenseLinearHead random_dense_head(Link link, Eigen::Index d, Eigen::Index k, Rng& rng) {
  DenseLinearHead head;
  head.link = link;
  head.weights = random_matrix(k, d, rng, 0.7);
  head.bias = random_vector(k, rng, 0.5);
  return head;
}

inline GaussianVariationalHead random_bayes_head(Link link, Eigen::Index d, Eigen::Index k, Rng& rng) {
  GaussianVariationalHead head;
  head.link = link;
  head.mu_w = random_matrix(k, d, rng, 0.7);
  head.mu_b = random_vector(k, rng, 0.5);
  head.rho_w = Eigen::MatrixXd::NullaryExpr(k, d, [&] { return rng.uniform(-4.0, 0.5); });
  head.rho_b = Eigen::VectorXd::NullaryExpr(k, [&] { return rng.uniform(-4.0, 0.5); });
  head.prior = {rng.uniform(-0.5, 0.5), rng.uniform(0.2, 2.0)};
  return head;
}

// Max over entries of |a-b| / max(|a|, |b|); the tiny floor only avoids 0/0.
inline double max_relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double x = a.data()[i];
    const double y = b.data()[i];
    const double denom = std::max({1e-12, std::abs(x), std::abs(y)});
    worst = std::max(worst, std::abs(x - y) / denom);
  }
  return worst;
}

// Small labelled dataset built in memory.
inline EmbeddingDataset tiny_classification(std::size_t n, std::size_t d, std::size_t k) {
  EmbeddingDataset ds;
  ds.task = TaskKind::classification;
  ds.num_features = d;
  ds.num_outputs = k;
  for (std::size_t c = 0; c < k; ++c) ds.class_names.push_back("c" + std::to_string(c));
  for (std::size_t i = 0; i < n; ++i) {
    Record r;
    r.id = "r" + std::to_string(i);
    r.label = static_cast<int>(i % k);
    for (std::size_t j = 0; j < d; ++j) r.features.push_back(static_cast<double>(i) * 0.5 - static_cast<double>(j));
    ds.records.push_back(r);
  }
  return ds;
}

}  // namespace vbhead::testing

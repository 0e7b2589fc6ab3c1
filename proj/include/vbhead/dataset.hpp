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
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "vbhead/common.hpp"

namespace vbhead {

struct Record {
  std::string id;
  std::vector<double> features;
  // Classification target; unused for regression.
  int label = 0;
  // Regression intensities in [0,1]; empty for classification.
  std::vector<double> targets;

  bool operator==(const Record&) const = default;
};

// Fixed-dimension embedding vectors with either class labels or intensity
// targets. Immutable once validated.
struct EmbeddingDataset {
  TaskKind task = TaskKind::classification;
  std::size_t num_features = 0;
  std::size_t num_outputs = 0;
  std::vector<std::string> class_names;
  std::vector<Record> records;
  nlohmann::json provenance = nlohmann::json::object();

  std::size_t size() const { return records.size(); }
  bool operator==(const EmbeddingDataset&) const = default;
};

// Throws Error describing the first violated invariant.
void validate(const EmbeddingDataset& dataset);

// Sidecar manifest path: "<dir>/<stem>.manifest.json" for "<dir>/<stem>.csv".
std::filesystem::path manifest_path_for(const std::filesystem::path& csv_path);

EmbeddingDataset load_dataset(const std::filesystem::path& csv_path);
void save_dataset(const EmbeddingDataset& dataset, const std::filesystem::path& csv_path);

struct SyntheticSpec {
  enum class Kind { blobs, planted_regression };
  Kind kind = Kind::blobs;
  std::size_t num_examples = 0;
  std::size_t num_features = 0;
  std::size_t num_outputs = 0;
  double class_separation = 0.0;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
};

// blobs: class c centred at separation * e_c with isotropic noise, labels
// assigned round-robin so class counts differ by at most one.
// planted_regression: t = clamp(sigmoid(A x + c) + noise, 0, 1).
EmbeddingDataset generate_synthetic(const SyntheticSpec& spec);

// Seeded shuffle, then the first round(fraction * n) records go to the
// second dataset. Both halves keep the original relative order.
std::pair<EmbeddingDataset, EmbeddingDataset> split_by_fraction(
    const EmbeddingDataset& dataset, double second_fraction, std::uint64_t seed);

// Fixed merged-class order.
inline const std::vector<std::string> kMergedClassNames = {"no_affil", "yes_affil", "no_presta",
                                                           "yes_presta"};

// requests: binary {no=0, yes=1}; complaints: binary {affil=0, presta=1}.
// merged index = 2 * complaint + request.
EmbeddingDataset merge_binary_labels(const EmbeddingDataset& requests,
                                     const EmbeddingDataset& complaints);
std::pair<EmbeddingDataset, EmbeddingDataset> split_merged_labels(const EmbeddingDataset& merged);

// Features of `a` first, then `b`. Targets, names and task come from `a`.
EmbeddingDataset concat_features(const EmbeddingDataset& a, const EmbeddingDataset& b);

// Dense view used by the heads: one row per record.
struct Batch {
  TaskKind task = TaskKind::classification;
  Eigen::MatrixXd x;        // n x d
  std::vector<int> labels;  // classification
  Eigen::MatrixXd targets;  // n x M, regression

  Eigen::Index size() const { return x.rows(); }
};

Batch make_batch(const EmbeddingDataset& dataset);
Batch make_batch(const EmbeddingDataset& dataset, std::span<const std::size_t> indices);

}  // namespace vbhead

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

#include <functional>
#include <span>
#include <vector>

#include "vbhead/dataset.hpp"
#include "vbhead/prediction_table.hpp"
#include "vbhead/trainer.hpp"

namespace vbhead {

struct FusionInput {
  std::reference_wrapper<const PredictionTable> table;
  double weight = 1.0;
};

using FusionSpec = std::vector<FusionInput>;

struct LateFusion {
  // Weighted sum divided by the total weight, so rows remain distributions.
  PredictionTable table;
  // Argmax of the raw weighted sum (probability tables only).
  std::vector<int> predicted;
};

LateFusion late_fuse(const FusionSpec& spec);

// Per example the most frequent argmax wins; ties go to the larger summed
// probability, then to the lower class index. Rows are one-hot.
PredictionTable majority_vote(std::span<const PredictionTable> tables);

// Elementwise mean of intensity tables.
PredictionTable average_intensities(std::span<const PredictionTable> tables);

struct FusionSearch {
  std::vector<double> weights;
  double uar = 0.0;
  std::size_t candidates = 0;
};

// Tries every assignment of grid values to the tables (skipping all-zero)
// and keeps the one with the best UAR on `dev`; the first in enumeration
// order wins ties.
FusionSearch tune_fusion_weights(std::span<const PredictionTable> tables, const EmbeddingDataset& dev,
                                 std::span<const double> grid);

// Concatenates the two embedding sets and trains a single head on them.
TrainResult early_fuse_train(const EmbeddingDataset& train_a, const EmbeddingDataset& train_b,
                             const EmbeddingDataset& dev_a, const EmbeddingDataset& dev_b, HeadKind kind,
                             const TrainConfig& config, const DenseLinearHead* prior_source = nullptr);

}  // namespace vbhead

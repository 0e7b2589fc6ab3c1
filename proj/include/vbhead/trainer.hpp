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
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vbhead/dataset.hpp"
#include "vbhead/linear_head.hpp"
#include "vbhead/model.hpp"

namespace vbhead {

enum class HeadKind { linear, bayes };
enum class SelectionMetric { uar, spearman, loss };

HeadKind parse_head_kind(std::string_view text);
SelectionMetric parse_selection_metric(std::string_view text);
std::string_view to_string(SelectionMetric metric);

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  int epochs = 30;
  int batch_size = 32;
  // Weight draws per minibatch step (bayes only).
  int mc_samples = 1;
  // nullopt means 1 / (number of minibatches per epoch).
  std::optional<double> kl_weight;
  std::uint64_t seed = 0;
  // nullopt picks uar for classification and spearman for regression.
  std::optional<SelectionMetric> selection;
  // Bayes only: initial posterior std; nullopt uses the prior std.
  std::optional<double> sigma_init;
  // Bayes only: explicit prior, used when no prior source head is given.
  std::optional<ScalarGaussianPrior> prior;
  // Weight draws used when scoring the dev set and the epoch objective.
  int eval_samples = 20;
};

void validate(const TrainConfig& config);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double data_term = 0.0;
  double kl_term = 0.0;
  double dev_metric = 0.0;
};

struct TrainReport {
  double initial_train_loss = 0.0;
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  double kl_weight = 0.0;
  SelectionMetric selection = SelectionMetric::uar;
  double wall_clock_seconds = 0.0;
};

// Timing is left out unless requested: it is the only nondeterministic field.
nlohmann::json to_json(const TrainReport& report, bool include_timing);

struct TrainResult {
  AnyHead head;
  TrainReport report;
};

// Minibatch SGD with momentum, reshuffled every epoch from the seeded RNG.
// Returns the head from the epoch with the best dev metric (earliest on
// ties). A bayes head takes its prior from `prior_source` when given, else
// from config.prior.
TrainResult train(HeadKind kind, const EmbeddingDataset& train_set, const EmbeddingDataset& dev_set,
                  const TrainConfig& config, const DenseLinearHead* prior_source = nullptr);

// Dev-set score used for model selection.
double selection_score(SelectionMetric metric, const PredictionTable& predictions,
                       const EmbeddingDataset& dataset);

}  // namespace vbhead

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
#include <variant>

#include <json.hpp>

#include "vbhead/bayes_head.hpp"
#include "vbhead/dataset.hpp"
#include "vbhead/linear_head.hpp"
#include "vbhead/prediction_table.hpp"

namespace vbhead {

using AnyHead = std::variant<DenseLinearHead, GaussianVariationalHead>;

Link link_of(const AnyHead& head);
Eigen::Index input_dim(const AnyHead& head);
Eigen::Index output_dim(const AnyHead& head);

nlohmann::json to_json(const AnyHead& head);
// Dispatches on the checkpoint's "type" field.
AnyHead head_from_json(const nlohmann::json& j);

void save_checkpoint(const AnyHead& head, const std::filesystem::path& path);
AnyHead load_checkpoint(const std::filesystem::path& path);

// Bayesian heads average `num_samples` weight draws per example, each
// example using its own stream Rng(seed, row index). Deterministic heads
// ignore both arguments.
PredictionTable predict_table(const AnyHead& head, const EmbeddingDataset& dataset,
                              int num_samples, std::uint64_t seed);

// Writes JSON with two-space indent and a trailing newline.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace vbhead

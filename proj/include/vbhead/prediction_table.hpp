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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vbhead/common.hpp"

namespace vbhead {

enum class TableKind { probabilities, intensities };

std::string_view to_string(TableKind kind);
TableKind table_kind_for(TaskKind task);

// Per-example model outputs: class probabilities (rows sum to one) or
// intensities in [0,1].
struct PredictionTable {
  TableKind kind = TableKind::probabilities;
  std::vector<std::string> ids;
  Eigen::MatrixXd outputs;  // n x k_out
  std::string source;

  Eigen::Index size() const { return outputs.rows(); }
  Eigen::Index k_out() const { return outputs.cols(); }
};

inline constexpr double kRowSumTolerance = 1e-6;

void validate(const PredictionTable& table);

// Largest entry of each row; ties go to the lowest index.
std::vector<int> argmax_rows(const Eigen::MatrixXd& outputs);

// CSV "id,p0,...,p{K-1}" plus sidecar manifest {"kind", "source"}.
void save_table(const PredictionTable& table, const std::filesystem::path& csv_path);
PredictionTable load_table(const std::filesystem::path& csv_path);

// Reorders every table to the id order of the first one. Throws when the
// id sets, kinds or widths differ.
std::vector<PredictionTable> align_tables(std::span<const PredictionTable> tables);

}  // namespace vbhead

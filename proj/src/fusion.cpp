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

#include "vbhead/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "vbhead/metrics.hpp"

namespace vbhead {

namespace {

// Sums the values in sorted order so the result does not depend on the
// order in which tables were supplied.
double order_free_sum(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

// Mean as smallest value plus the mean offset from it; exact when all
// values agree.
double order_free_mean(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double offset = 0.0;
  for (double v : values) offset += v - values.front();
  return values.front() + offset / static_cast<double>(values.size());
}

std::string joined_sources(std::span<const PredictionTable> tables) {
  std::string out;
  for (const auto& t : tables) out += (out.empty() ? "" : "+") + (t.source.empty() ? std::string("?") : t.source);
  return out;
}

}  // namespace

LateFusion late_fuse(const FusionSpec& spec) {
  if (spec.empty()) throw Error("late fusion needs at least one table");
  std::vector<PredictionTable> inputs;
  double weight_sum = 0.0;
  for (const auto& in : spec) {
    if (!(in.weight >= 0.0) || !std::isfinite(in.weight)) throw Error("fusion weights must be finite and nonnegative");
    weight_sum += in.weight;
    inputs.push_back(in.table.get());
  }
  if (!(weight_sum > 0.0)) throw Error("at least one fusion weight must be positive");
  const auto tables = align_tables(inputs);

  const PredictionTable& ref = tables.front();
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(ref.size(), ref.k_out());
  for (std::size_t t = 0; t < tables.size(); ++t) raw += spec[t].weight * tables[t].outputs;

  LateFusion out;
  out.table.kind = ref.kind;
  out.table.ids = ref.ids;
  out.table.outputs = raw / weight_sum;
  out.table.source = "late_fuse(" + joined_sources(tables) + ")";
  if (ref.kind == TableKind::probabilities) out.predicted = argmax_rows(raw);
  return out;
}

PredictionTable majority_vote(std::span<const PredictionTable> tables) {
  if (tables.size() < 2) throw Error("majority vote needs at least two tables");
  const auto aligned = align_tables(tables);
  const PredictionTable& ref = aligned.front();
  if (ref.kind != TableKind::probabilities) throw Error("majority vote applies to probability tables");

  std::vector<std::vector<int>> votes;
  for (const auto& t : aligned) votes.push_back(argmax_rows(t.outputs));

  PredictionTable out;
  out.kind = TableKind::probabilities;
  out.ids = ref.ids;
  out.outputs = Eigen::MatrixXd::Zero(ref.size(), ref.k_out());
  out.source = "majority_vote(" + joined_sources(aligned) + ")";
  const auto k = static_cast<std::size_t>(ref.k_out());
  for (Eigen::Index i = 0; i < ref.size(); ++i) {
    std::vector<int> count(k, 0);
    for (const auto& v : votes) ++count[static_cast<std::size_t>(v[static_cast<std::size_t>(i)])];
    const int top = *std::max_element(count.begin(), count.end());
    int winner = -1;
    double winner_mass = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] != top) continue;
      std::vector<double> mass;
      for (const auto& t : aligned) mass.push_back(t.outputs(i, static_cast<Eigen::Index>(c)));
      const double total = order_free_sum(mass);
      if (winner < 0 || total > winner_mass) {
        winner = static_cast<int>(c);
        winner_mass = total;
      }
    }
    out.outputs(i, winner) = 1.0;
  }
  return out;
}

PredictionTable average_intensities(std::span<const PredictionTable> tables) {
  if (tables.size() < 2) throw Error("averaging needs at least two tables");
  const auto aligned = align_tables(tables);
  const PredictionTable& ref = aligned.front();
  if (ref.kind != TableKind::intensities) throw Error("averaging applies to intensity tables");

  PredictionTable out;
  out.kind = TableKind::intensities;
  out.ids = ref.ids;
  out.outputs.resize(ref.size(), ref.k_out());
  out.source = "average(" + joined_sources(aligned) + ")";
  std::vector<double> cell(aligned.size());
  for (Eigen::Index i = 0; i < ref.size(); ++i) {
    for (Eigen::Index m = 0; m < ref.k_out(); ++m) {
      for (std::size_t t = 0; t < aligned.size(); ++t) cell[t] = aligned[t].outputs(i, m);
      out.outputs(i, m) = order_free_mean(cell);
    }
  }
  return out;
}

FusionSearch tune_fusion_weights(std::span<const PredictionTable> tables, const EmbeddingDataset& dev,
                                 std::span<const double> grid) {
  if (tables.empty()) throw Error("no tables to fuse");
  if (grid.empty()) throw Error("weight grid is empty");
  if (dev.task != TaskKind::classification) throw Error("fusion tuning needs a classification dev set");
  for (double w : grid) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("grid weights must be finite and nonnegative");
  }

  if (static_cast<std::size_t>(tables.front().ids.size()) != dev.size()) {
    throw Error("prediction tables and dev set differ in size");
  }
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < tables.front().ids.size(); ++i) row_of.emplace(tables.front().ids[i], i);
  std::vector<int> truth;
  truth.reserve(dev.size());
  for (const Record& r : dev.records) truth.push_back(r.label);

  FusionSearch best;
  std::vector<std::size_t> pick(tables.size(), 0);
  bool have_best = false;
  for (;;) {
    FusionSpec spec;
    bool any_positive = false;
    for (std::size_t t = 0; t < tables.size(); ++t) {
      spec.push_back({tables[t], grid[pick[t]]});
      any_positive = any_positive || grid[pick[t]] > 0.0;
    }
    if (any_positive) {
      ++best.candidates;
      const LateFusion fused = late_fuse(spec);
      std::vector<int> predicted;
      predicted.reserve(dev.size());
      for (const Record& r : dev.records) {
        const auto it = row_of.find(r.id);
        if (it == row_of.end()) throw Error("no fused prediction for dev id '" + r.id + "'");
        predicted.push_back(fused.predicted[it->second]);
      }
      const double score = uar(truth, predicted, static_cast<int>(dev.num_outputs));
      if (!have_best || score > best.uar) {
        have_best = true;
        best.uar = score;
        best.weights.clear();
        for (const auto& in : spec) best.weights.push_back(in.weight);
      }
    }
    // Odometer increment, last table fastest.
    bool done = true;
    for (std::size_t pos = tables.size(); pos-- > 0;) {
      if (++pick[pos] < grid.size()) {
        done = false;
        break;
      }
      pick[pos] = 0;
    }
    if (done) break;
  }
  if (!have_best) throw Error("weight grid has no positive value");
  return best;
}

TrainResult early_fuse_train(const EmbeddingDataset& train_a, const EmbeddingDataset& train_b,
                             const EmbeddingDataset& dev_a, const EmbeddingDataset& dev_b, HeadKind kind,
                             const TrainConfig& config, const DenseLinearHead* prior_source) {
  return train(kind, concat_features(train_a, train_b), concat_features(dev_a, dev_b), config, prior_source);
}

}  // namespace vbhead

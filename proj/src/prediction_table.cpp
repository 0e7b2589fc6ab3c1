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

#include "vbhead/prediction_table.hpp"

#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "vbhead/dataset.hpp"

namespace vbhead {

std::string_view to_string(TableKind kind) {
  return kind == TableKind::probabilities ? "probabilities" : "intensities";
}

TableKind table_kind_for(TaskKind task) {
  return task == TaskKind::classification ? TableKind::probabilities : TableKind::intensities;
}

namespace {

TableKind parse_table_kind(std::string_view text) {
  if (text == "probabilities") return TableKind::probabilities;
  if (text == "intensities") return TableKind::intensities;
  throw Error("unknown prediction table kind '" + std::string(text) + "'");
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t pos; (pos = line.find(',', start)) != std::string_view::npos; start = pos + 1) {
    out.push_back(line.substr(start, pos - start));
  }
  out.push_back(line.substr(start));
  return out;
}

}  // namespace

void validate(const PredictionTable& table) {
  if (static_cast<Eigen::Index>(table.ids.size()) != table.outputs.rows()) {
    throw Error("prediction table has " + std::to_string(table.ids.size()) + " ids for " +
                std::to_string(table.outputs.rows()) + " rows");
  }
  if (table.outputs.cols() == 0) throw Error("prediction table has no output columns");
  std::unordered_set<std::string> seen;
  for (Eigen::Index i = 0; i < table.outputs.rows(); ++i) {
    const std::string& id = table.ids[static_cast<std::size_t>(i)];
    if (!seen.insert(id).second) throw Error("duplicate id '" + id + "' in prediction table");
    for (Eigen::Index k = 0; k < table.outputs.cols(); ++k) {
      const double v = table.outputs(i, k);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error("prediction for '" + id + "' has an entry outside [0,1]");
      }
    }
    if (table.kind == TableKind::probabilities &&
        std::abs(table.outputs.row(i).sum() - 1.0) > kRowSumTolerance) {
      throw Error("probabilities for '" + id + "' do not sum to 1");
    }
  }
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& outputs) {
  std::vector<int> out(static_cast<std::size_t>(outputs.rows()));
  for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < outputs.cols(); ++k) {
      if (outputs(i, k) > outputs(i, best)) best = k;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

void save_table(const PredictionTable& table, const std::filesystem::path& csv_path) {
  validate(table);
  if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
  const nlohmann::json manifest = {{"kind", std::string(to_string(table.kind))},
                                   {"source", table.source}};
  {
    std::ofstream out(manifest_path_for(csv_path), std::ios::binary);
    out << manifest.dump(2) << '\n';
    if (!out) throw Error("failed writing " + manifest_path_for(csv_path).string());
  }
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw Error("cannot write " + csv_path.string());
  out << "id";
  for (Eigen::Index k = 0; k < table.k_out(); ++k) out << ",p" << k;
  out << '\n';
  for (Eigen::Index i = 0; i < table.size(); ++i) {
    out << table.ids[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < table.k_out(); ++k) out << ',' << format_real(table.outputs(i, k));
    out << '\n';
  }
  if (!out) throw Error("failed writing " + csv_path.string());
}

PredictionTable load_table(const std::filesystem::path& csv_path) {
  PredictionTable table;
  const auto manifest_path = manifest_path_for(csv_path);
  std::ifstream manifest_in(manifest_path);
  if (!manifest_in) throw Error("missing manifest " + manifest_path.string());
  try {
    const auto manifest = nlohmann::json::parse(manifest_in);
    table.kind = parse_table_kind(manifest.at("kind").get<std::string>());
    table.source = manifest.value("source", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid manifest " + manifest_path.string() + ": " + e.what());
  }

  std::ifstream in(csv_path);
  if (!in) throw Error("cannot open " + csv_path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(csv_path.string() + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 2 || header[0] != "id") throw Error(csv_path.string() + ": bad header");
  for (std::size_t k = 1; k < header.size(); ++k) {
    if (header[k] != "p" + std::to_string(k - 1)) throw Error(csv_path.string() + ": bad header");
  }
  const std::size_t width = header.size() - 1;

  std::vector<std::vector<double>> rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != width + 1) {
      throw Error("row " + std::to_string(row) + ": expected " + std::to_string(width + 1) + " fields");
    }
    table.ids.emplace_back(fields[0]);
    std::vector<double> values;
    try {
      for (std::size_t k = 1; k < fields.size(); ++k) values.push_back(parse_real(fields[k]));
    } catch (const Error& e) {
      throw Error("row " + std::to_string(row) + ": " + e.what());
    }
    rows.push_back(std::move(values));
  }
  table.outputs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < width; ++k)
      table.outputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  validate(table);
  return table;
}

std::vector<PredictionTable> align_tables(std::span<const PredictionTable> tables) {
  if (tables.empty()) throw Error("no prediction tables given");
  const PredictionTable& ref = tables.front();
  std::unordered_map<std::string, Eigen::Index> position;
  for (std::size_t i = 0; i < ref.ids.size(); ++i) position.emplace(ref.ids[i], static_cast<Eigen::Index>(i));

  std::vector<PredictionTable> out;
  out.reserve(tables.size());
  for (std::size_t t = 0; t < tables.size(); ++t) {
    const PredictionTable& table = tables[t];
    const std::string label = "table " + std::to_string(t);
    validate(table);
    if (table.kind != ref.kind) throw Error(label + " has a different kind than table 0");
    if (table.k_out() != ref.k_out()) throw Error(label + " has a different number of outputs");
    if (table.ids.size() != ref.ids.size()) throw Error(label + " has a different number of rows");
    PredictionTable aligned = table;
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
      const auto it = position.find(table.ids[i]);
      if (it == position.end()) throw Error(label + ": id '" + table.ids[i] + "' is not in table 0");
      aligned.outputs.row(it->second) = table.outputs.row(static_cast<Eigen::Index>(i));
    }
    aligned.ids = ref.ids;
    out.push_back(std::move(aligned));
  }
  return out;
}

}  // namespace vbhead

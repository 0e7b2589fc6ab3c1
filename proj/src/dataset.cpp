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

#include "vbhead/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace vbhead {

namespace {

std::string row_error(std::size_t row, const std::string& what) {
  return "row " + std::to_string(row) + ": " + what;
}

void check_id(const std::string& id) {
  if (id.empty()) throw Error("record id must be nonempty");
  if (id.find_first_of(",\"\r\n") != std::string::npos) {
    throw Error("record id '" + id + "' contains a reserved character");
  }
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::vector<std::string> expected_header(const EmbeddingDataset& ds) {
  std::vector<std::string> header{"id"};
  for (std::size_t j = 0; j < ds.num_features; ++j) header.push_back("f" + std::to_string(j));
  if (ds.task == TaskKind::classification) {
    header.emplace_back("y");
  } else {
    for (std::size_t m = 0; m < ds.num_outputs; ++m) header.push_back("y" + std::to_string(m));
  }
  return header;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_record(const EmbeddingDataset& ds, const Record& r, std::size_t row) {
  if (r.features.size() != ds.num_features) {
    throw Error(row_error(row, "expected " + std::to_string(ds.num_features) + " features, got " +
                                   std::to_string(r.features.size())));
  }
  for (std::size_t j = 0; j < r.features.size(); ++j) {
    if (!std::isfinite(r.features[j])) {
      throw Error(row_error(row, "non-finite feature f" + std::to_string(j)));
    }
  }
  if (ds.task == TaskKind::classification) {
    if (r.label < 0 || static_cast<std::size_t>(r.label) >= ds.num_outputs) {
      throw Error(row_error(row, "class index out of range: " + std::to_string(r.label)));
    }
  } else {
    if (r.targets.size() != ds.num_outputs) {
      throw Error(row_error(row, "expected " + std::to_string(ds.num_outputs) + " targets"));
    }
    for (double t : r.targets) {
      if (!(t >= 0.0 && t <= 1.0)) throw Error(row_error(row, "target out of [0,1]"));
    }
  }
}

}  // namespace

void validate(const EmbeddingDataset& ds) {
  if (ds.num_outputs == 0) throw Error("num_outputs must be positive");
  if (ds.task == TaskKind::classification && ds.class_names.size() != ds.num_outputs) {
    throw Error("class_names must list exactly num_outputs names");
  }
  if (ds.task == TaskKind::regression && !ds.class_names.empty()) {
    throw Error("regression datasets carry no class names");
  }
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const Record& r = ds.records[i];
    check_id(r.id);
    if (!seen.insert(r.id).second) throw Error(row_error(i + 1, "duplicate id '" + r.id + "'"));
    check_record(ds, r, i + 1);
  }
}

std::filesystem::path manifest_path_for(const std::filesystem::path& csv_path) {
  std::filesystem::path out = csv_path;
  out.replace_extension(".manifest.json");
  return out;
}

EmbeddingDataset load_dataset(const std::filesystem::path& csv_path) {
  const auto manifest_path = manifest_path_for(csv_path);
  std::ifstream manifest_in(manifest_path);
  if (!manifest_in) throw Error("missing manifest " + manifest_path.string());

  EmbeddingDataset ds;
  try {
    const auto manifest = nlohmann::json::parse(manifest_in);
    ds.task = parse_task_kind(manifest.at("task").get<std::string>());
    const auto d = manifest.at("num_features").get<long long>();
    const auto k = manifest.at("num_outputs").get<long long>();
    if (d < 0 || k <= 0) throw Error("manifest dimensions must be nonnegative / positive");
    ds.num_features = static_cast<std::size_t>(d);
    ds.num_outputs = static_cast<std::size_t>(k);
    if (ds.task == TaskKind::classification) {
      ds.class_names = manifest.at("class_names").get<std::vector<std::string>>();
    }
    if (manifest.contains("provenance")) ds.provenance = manifest.at("provenance");
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid manifest " + manifest_path.string() + ": " + e.what());
  }

  std::ifstream in(csv_path);
  if (!in) throw Error("cannot open " + csv_path.string());

  std::string line;
  if (!std::getline(in, line)) throw Error(csv_path.string() + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  const auto want = expected_header(ds);
  if (header.size() != want.size() ||
      !std::equal(header.begin(), header.end(), want.begin())) {
    throw Error(csv_path.string() + ": header does not match manifest dimensions");
  }

  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != want.size()) {
      throw Error(row_error(row, "expected " + std::to_string(want.size()) + " fields, got " +
                                     std::to_string(fields.size())));
    }
    Record r;
    r.id = std::string(fields[0]);
    r.features.reserve(ds.num_features);
    try {
      for (std::size_t j = 0; j < ds.num_features; ++j) {
        r.features.push_back(parse_real(fields[1 + j]));
      }
      if (ds.task == TaskKind::classification) {
        const double y = parse_real(fields.back());
        if (y != std::floor(y)) throw Error("class index must be an integer");
        if (y < 0.0 || y >= static_cast<double>(ds.num_outputs)) {
          throw Error("class index out of range: " + std::string(fields.back()));
        }
        r.label = static_cast<int>(y);
      } else {
        for (std::size_t m = 0; m < ds.num_outputs; ++m) {
          r.targets.push_back(parse_real(fields[1 + ds.num_features + m]));
        }
      }
    } catch (const Error& e) {
      throw Error(row_error(row, e.what()));
    }
    ds.records.push_back(std::move(r));
  }
  validate(ds);
  return ds;
}

void save_dataset(const EmbeddingDataset& ds, const std::filesystem::path& csv_path) {
  validate(ds);
  nlohmann::json manifest = {
      {"task", std::string(to_string(ds.task))},
      {"num_features", ds.num_features},
      {"num_outputs", ds.num_outputs},
      {"provenance", ds.provenance},
  };
  if (ds.task == TaskKind::classification) manifest["class_names"] = ds.class_names;

  if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
  {
    std::ofstream out(manifest_path_for(csv_path), std::ios::binary);
    out << manifest.dump(2) << '\n';
    if (!out) throw Error("failed writing " + manifest_path_for(csv_path).string());
  }

  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw Error("cannot write " + csv_path.string());
  const auto header = expected_header(ds);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const Record& r : ds.records) {
    out << r.id;
    for (double f : r.features) out << ',' << format_real(f);
    if (ds.task == TaskKind::classification) {
      out << ',' << r.label;
    } else {
      for (double t : r.targets) out << ',' << format_real(t);
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing " + csv_path.string());
}

EmbeddingDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_examples == 0 || spec.num_outputs == 0) {
    throw Error("SyntheticSpec needs positive num_examples and num_outputs");
  }
  if (spec.num_examples < spec.num_outputs) throw Error("num_examples must be >= num_outputs");
  if (!(spec.noise_std >= 0.0) || !std::isfinite(spec.noise_std)) {
    throw Error("noise_std must be finite and nonnegative");
  }

  Rng rng(spec.seed);
  EmbeddingDataset ds;
  ds.num_features = spec.num_features;
  ds.num_outputs = spec.num_outputs;

  const std::size_t width = std::max<std::size_t>(5, std::to_string(spec.num_examples).size());
  const auto make_id = [width](std::size_t i) {
    std::string digits = std::to_string(i);
    return "ex" + std::string(width - digits.size(), '0') + digits;
  };

  if (spec.kind == SyntheticSpec::Kind::blobs) {
    if (spec.num_outputs < 2) throw Error("blobs need at least 2 classes");
    if (spec.num_features < spec.num_outputs) {
      throw Error("blobs need num_features >= num_outputs (one axis per class centre)");
    }
    if (!(spec.class_separation >= 0.0) || !std::isfinite(spec.class_separation)) {
      throw Error("class_separation must be finite and nonnegative");
    }
    ds.task = TaskKind::classification;
    for (std::size_t c = 0; c < spec.num_outputs; ++c) ds.class_names.push_back("c" + std::to_string(c));
    ds.provenance = {{"generator", "blobs"},
                     {"seed", spec.seed},
                     {"class_separation", spec.class_separation},
                     {"noise_std", spec.noise_std}};
    for (std::size_t i = 0; i < spec.num_examples; ++i) {
      Record r;
      r.id = make_id(i);
      r.label = static_cast<int>(i % spec.num_outputs);
      r.features.resize(spec.num_features);
      for (std::size_t j = 0; j < spec.num_features; ++j) {
        const double centre = (j == static_cast<std::size_t>(r.label)) ? spec.class_separation : 0.0;
        r.features[j] = round_to_storage(centre + spec.noise_std * rng.normal());
      }
      ds.records.push_back(std::move(r));
    }
  } else {
    if (spec.num_features == 0) throw Error("planted_regression needs num_features > 0");
    ds.task = TaskKind::regression;
    ds.provenance = {{"generator", "planted_regression"},
                     {"seed", spec.seed},
                     {"noise_std", spec.noise_std}};
    // Planted map scaled so that A x has unit-order spread for x ~ N(0, I).
    const double scale = 2.0 / std::sqrt(static_cast<double>(spec.num_features));
    Eigen::MatrixXd planted(spec.num_outputs, spec.num_features);
    Eigen::VectorXd offset(spec.num_outputs);
    for (Eigen::Index m = 0; m < planted.rows(); ++m)
      for (Eigen::Index j = 0; j < planted.cols(); ++j) planted(m, j) = scale * rng.normal();
    for (Eigen::Index m = 0; m < offset.size(); ++m) offset(m) = 0.5 * rng.normal();

    Eigen::VectorXd x(spec.num_features);
    for (std::size_t i = 0; i < spec.num_examples; ++i) {
      Record r;
      r.id = make_id(i);
      for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = rng.normal();
      const Eigen::VectorXd z = planted * x + offset;
      r.features.resize(spec.num_features);
      for (Eigen::Index j = 0; j < x.size(); ++j) r.features[static_cast<std::size_t>(j)] = round_to_storage(x(j));
      r.targets.resize(spec.num_outputs);
      for (std::size_t m = 0; m < spec.num_outputs; ++m) {
        const double t = sigmoid(z(static_cast<Eigen::Index>(m))) + spec.noise_std * rng.normal();
        r.targets[m] = round_to_storage(std::clamp(t, 0.0, 1.0));
      }
      ds.records.push_back(std::move(r));
    }
  }
  return ds;
}

std::pair<EmbeddingDataset, EmbeddingDataset> split_by_fraction(const EmbeddingDataset& dataset,
                                                                 double second_fraction,
                                                                 std::uint64_t seed) {
  if (!(second_fraction >= 0.0 && second_fraction <= 1.0)) {
    throw Error("split fraction must lie in [0,1]");
  }
  const std::size_t n = dataset.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng.engine());

  const auto n_second = static_cast<std::size_t>(std::llround(second_fraction * static_cast<double>(n)));
  std::vector<bool> in_second(n, false);
  for (std::size_t i = 0; i < n_second; ++i) in_second[order[i]] = true;

  EmbeddingDataset first = dataset;
  EmbeddingDataset second = dataset;
  first.records.clear();
  second.records.clear();
  for (std::size_t i = 0; i < n; ++i) {
    (in_second[i] ? second : first).records.push_back(dataset.records[i]);
  }
  return {std::move(first), std::move(second)};
}

namespace {

void require_aligned_ids(const EmbeddingDataset& a, const EmbeddingDataset& b) {
  if (a.size() != b.size()) throw Error("datasets differ in record count");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.records[i].id != b.records[i].id) {
      throw Error(row_error(i + 1, "id mismatch '" + a.records[i].id + "' vs '" + b.records[i].id + "'"));
    }
  }
}

void require_binary(const EmbeddingDataset& ds, const char* which) {
  if (ds.task != TaskKind::classification || ds.num_outputs != 2) {
    throw Error(std::string(which) + " must be a binary classification dataset");
  }
}

}  // namespace

EmbeddingDataset merge_binary_labels(const EmbeddingDataset& requests,
                                     const EmbeddingDataset& complaints) {
  require_binary(requests, "requests dataset");
  require_binary(complaints, "complaints dataset");
  require_aligned_ids(requests, complaints);
  if (requests.num_features != complaints.num_features) throw Error("feature dimension mismatch");

  EmbeddingDataset merged = requests;
  merged.num_outputs = kMergedClassNames.size();
  merged.class_names = kMergedClassNames;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    if (requests.records[i].features != complaints.records[i].features) {
      throw Error(row_error(i + 1, "features differ between the two label sources"));
    }
    merged.records[i].label = 2 * complaints.records[i].label + requests.records[i].label;
  }
  return merged;
}

std::pair<EmbeddingDataset, EmbeddingDataset> split_merged_labels(const EmbeddingDataset& merged) {
  if (merged.task != TaskKind::classification || merged.class_names != kMergedClassNames) {
    throw Error("dataset does not use the merged 4-class label set");
  }
  EmbeddingDataset requests = merged;
  EmbeddingDataset complaints = merged;
  requests.num_outputs = complaints.num_outputs = 2;
  requests.class_names = {"no", "yes"};
  complaints.class_names = {"affil", "presta"};
  for (std::size_t i = 0; i < merged.size(); ++i) {
    requests.records[i].label = merged.records[i].label % 2;
    complaints.records[i].label = merged.records[i].label / 2;
  }
  return {std::move(requests), std::move(complaints)};
}

EmbeddingDataset concat_features(const EmbeddingDataset& a, const EmbeddingDataset& b) {
  if (a.task != b.task) throw Error("cannot concatenate datasets of different task kinds");
  require_aligned_ids(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Record& ra = a.records[i];
    const Record& rb = b.records[i];
    const bool same = a.task == TaskKind::classification ? ra.label == rb.label
                                                         : ra.targets == rb.targets;
    if (!same) throw Error(row_error(i + 1, "target mismatch for id '" + ra.id + "'"));
  }
  EmbeddingDataset out = a;
  out.num_features = a.num_features + b.num_features;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& f = out.records[i].features;
    f.insert(f.end(), b.records[i].features.begin(), b.records[i].features.end());
  }
  return out;
}

Batch make_batch(const EmbeddingDataset& dataset) {
  std::vector<std::size_t> all(dataset.size());
  std::iota(all.begin(), all.end(), 0);
  return make_batch(dataset, all);
}

Batch make_batch(const EmbeddingDataset& dataset, std::span<const std::size_t> indices) {
  Batch batch;
  batch.task = dataset.task;
  const auto n = static_cast<Eigen::Index>(indices.size());
  batch.x.resize(n, static_cast<Eigen::Index>(dataset.num_features));
  if (dataset.task == TaskKind::classification) {
    batch.labels.reserve(indices.size());
  } else {
    batch.targets.resize(n, static_cast<Eigen::Index>(dataset.num_outputs));
  }
  for (Eigen::Index row = 0; row < n; ++row) {
    const Record& r = dataset.records.at(indices[static_cast<std::size_t>(row)]);
    for (std::size_t j = 0; j < r.features.size(); ++j) batch.x(row, static_cast<Eigen::Index>(j)) = r.features[j];
    if (dataset.task == TaskKind::classification) {
      batch.labels.push_back(r.label);
    } else {
      for (std::size_t m = 0; m < r.targets.size(); ++m)
        batch.targets(row, static_cast<Eigen::Index>(m)) = r.targets[m];
    }
  }
  return batch;
}

}  // namespace vbhead

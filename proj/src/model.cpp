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

#include "vbhead/model.hpp"

#include <fstream>
#include <string>

namespace vbhead {

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

}  // namespace

Link link_of(const AnyHead& head) {
  return std::visit([](const auto& h) { return h.link; }, head);
}

Eigen::Index input_dim(const AnyHead& head) {
  return std::visit([](const auto& h) { return h.d(); }, head);
}

Eigen::Index output_dim(const AnyHead& head) {
  return std::visit([](const auto& h) { return h.k_out(); }, head);
}

nlohmann::json to_json(const AnyHead& head) {
  return std::visit([](const auto& h) { return to_json(h); }, head);
}

AnyHead head_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("type")) throw Error("checkpoint has no \"type\" field");
  const auto type = j.at("type").get<std::string>();
  if (type == "dense_linear") return dense_head_from_json(j);
  if (type == "bayes_linear") return bayes_head_from_json(j);
  throw Error("unknown checkpoint type '" + type + "'");
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void save_checkpoint(const AnyHead& head, const std::filesystem::path& path) {
  write_json(to_json(head), path);
}

AnyHead load_checkpoint(const std::filesystem::path& path) { return head_from_json(read_json(path)); }

PredictionTable predict_table(const AnyHead& head, const EmbeddingDataset& dataset,
                              int num_samples, std::uint64_t seed) {
  if (task_for(link_of(head)) != dataset.task) throw Error("checkpoint task does not match the dataset");
  if (input_dim(head) != static_cast<Eigen::Index>(dataset.num_features)) {
    throw Error("checkpoint expects " + std::to_string(input_dim(head)) + " features, dataset has " +
                std::to_string(dataset.num_features));
  }
  if (output_dim(head) != static_cast<Eigen::Index>(dataset.num_outputs)) {
    throw Error("checkpoint output width does not match the dataset");
  }

  PredictionTable table;
  table.kind = table_kind_for(dataset.task);
  table.ids.reserve(dataset.size());
  for (const Record& r : dataset.records) table.ids.push_back(r.id);

  const Batch batch = make_batch(dataset);
  std::visit(overloaded{
                 [&](const DenseLinearHead& h) {
                   table.source = "dense_linear";
                   table.outputs = forward_batch(h, batch.x);
                 },
                 [&](const GaussianVariationalHead& h) {
                   if (num_samples < 1) throw Error("num_samples must be at least 1");
                   table.source = "bayes_linear:samples=" + std::to_string(num_samples);
                   table.outputs.resize(batch.x.rows(), h.k_out());
                   for (Eigen::Index i = 0; i < batch.x.rows(); ++i) {
                     Rng rng(seed, static_cast<std::uint64_t>(i));
                     table.outputs.row(i) =
                         predict_mean(h, batch.x.row(i).transpose(), num_samples, rng).mean.transpose();
                   }
                 },
             },
             head);
  return table;
}

}  // namespace vbhead

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

#include "vbhead/linear_head.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "flat_arrays.hpp"

namespace vbhead {

std::string_view to_string(Link link) { return link == Link::softmax ? "softmax" : "sigmoid"; }

Link parse_link(std::string_view text) {
  if (text == "softmax") return Link::softmax;
  if (text == "sigmoid") return Link::sigmoid;
  throw Error("unknown link '" + std::string(text) + "'");
}

TaskKind task_for(Link link) {
  return link == Link::softmax ? TaskKind::classification : TaskKind::regression;
}

Link link_for(TaskKind task) {
  return task == TaskKind::classification ? Link::softmax : Link::sigmoid;
}

Eigen::MatrixXd apply_link(Link link, const Eigen::MatrixXd& logits) {
  if (link == Link::sigmoid) {
    return logits.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
  }
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    double total = 0.0;
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      out(i, k) = std::exp(logits(i, k) - top);
      total += out(i, k);
    }
    out.row(i) /= total;
  }
  return out;
}

namespace {

void check_shapes(Link link, const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                  const Batch& batch) {
  if (batch.size() == 0) throw Error("empty batch");
  if (task_for(link) != batch.task) throw Error("head link does not match the batch task");
  if (batch.x.cols() != weights.cols()) {
    throw Error("feature dimension mismatch: head expects " + std::to_string(weights.cols()) +
                ", batch has " + std::to_string(batch.x.cols()));
  }
  if (bias.size() != weights.rows()) throw std::logic_error("bias/weight shape mismatch");
  if (batch.task == TaskKind::classification) {
    for (int y : batch.labels) {
      if (y < 0 || y >= weights.rows()) throw Error("class index out of range for head");
    }
  } else if (batch.targets.cols() != weights.rows()) {
    throw Error("target dimension mismatch");
  }
}

Eigen::MatrixXd logits_of(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                          const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = x * weights.transpose();
  z.rowwise() += bias.transpose();
  return z;
}

// dL/dz for the whole batch, already divided by the batch size.
Eigen::MatrixXd logit_gradient(Link link, const Eigen::MatrixXd& z, const Batch& batch) {
  const auto n = static_cast<double>(batch.size());
  Eigen::MatrixXd out = apply_link(link, z);
  if (link == Link::softmax) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, batch.labels[static_cast<std::size_t>(i)]) -= 1.0;
    return out / n;
  }
  const auto m = static_cast<double>(z.cols());
  Eigen::MatrixXd g = 2.0 * (out - batch.targets).cwiseProduct(out.cwiseProduct((1.0 - out.array()).matrix()));
  return g / (n * m);
}

}  // namespace

ForwardResult forward(const DenseLinearHead& head, const Eigen::VectorXd& x) {
  if (x.size() != head.d()) throw Error("input dimension mismatch");
  if (!x.allFinite()) throw Error("input contains non-finite values");
  ForwardResult r;
  r.logits = head.weights * x + head.bias;
  r.outputs = apply_link(head.link, r.logits.transpose()).transpose();
  return r;
}

Eigen::MatrixXd forward_batch(const DenseLinearHead& head, const Eigen::MatrixXd& x) {
  if (x.cols() != head.d()) throw Error("input dimension mismatch");
  return apply_link(head.link, logits_of(head.weights, head.bias, x));
}

double task_loss(Link link, const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                 const Batch& batch) {
  check_shapes(link, weights, bias, batch);
  const Eigen::MatrixXd z = logits_of(weights, bias, batch.x);
  double total = 0.0;
  if (link == Link::softmax) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double top = z.row(i).maxCoeff();
      const double lse = top + std::log((z.row(i).array() - top).exp().sum());
      total += lse - z(i, batch.labels[static_cast<std::size_t>(i)]);
    }
    return total / static_cast<double>(z.rows());
  }
  const Eigen::MatrixXd residual = apply_link(link, z) - batch.targets;
  return residual.squaredNorm() / static_cast<double>(z.rows() * z.cols());
}

LinearGradient task_loss_gradient(Link link, const Eigen::MatrixXd& weights,
                                  const Eigen::VectorXd& bias, const Batch& batch) {
  check_shapes(link, weights, bias, batch);
  const Eigen::MatrixXd g = logit_gradient(link, logits_of(weights, bias, batch.x), batch);
  return {g.transpose() * batch.x, g.colwise().sum().transpose()};
}

double loss(const DenseLinearHead& head, const Batch& batch) {
  return task_loss(head.link, head.weights, head.bias, batch);
}

LinearGradient loss_gradient(const DenseLinearHead& head, const Batch& batch) {
  return task_loss_gradient(head.link, head.weights, head.bias, batch);
}

ScalarGaussianPrior extract_prior(const DenseLinearHead& head) {
  const Eigen::Index count = head.weights.size() + head.bias.size();
  if (count < 2) throw Error("prior extraction needs at least 2 parameters");
  const double n = static_cast<double>(count);
  const double mean = (head.weights.sum() + head.bias.sum()) / n;
  const double ss = (head.weights.array() - mean).square().sum() + (head.bias.array() - mean).square().sum();
  const double std = std::sqrt(ss / (n - 1.0));
  return {mean, std < 1e-6 ? 1e-6 : std};
}

nlohmann::json to_json(const DenseLinearHead& head) {
  return {{"type", "dense_linear"},
          {"link", std::string(to_string(head.link))},
          {"d", head.d()},
          {"k_out", head.k_out()},
          {"weights", detail::flatten_rows(head.weights)},
          {"bias", detail::to_vector(head.bias)},
          {"trained_on", head.trained_on}};
}

DenseLinearHead dense_head_from_json(const nlohmann::json& j) {
  try {
    if (j.at("type").get<std::string>() != "dense_linear") throw Error("not a dense_linear checkpoint");
    DenseLinearHead head;
    head.link = parse_link(j.at("link").get<std::string>());
    const auto d = j.at("d").get<Eigen::Index>();
    const auto k = j.at("k_out").get<Eigen::Index>();
    if (d < 0 || k <= 0) throw Error("invalid checkpoint dimensions");
    head.weights = detail::matrix_from_flat(j.at("weights").get<std::vector<double>>(), k, d);
    head.bias = detail::matrix_from_flat(j.at("bias").get<std::vector<double>>(), k, 1);
    if (j.contains("trained_on")) head.trained_on = j.at("trained_on");
    return head;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid dense_linear checkpoint: ") + e.what());
  }
}

}  // namespace vbhead

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

// Deliberately naive reference implementations used as test oracles.
// They share no code with the library.

#include <cmath>
#include <cstddef>
#include <vector>

namespace vbhead::oracle {

inline double uar(const std::vector<int>& truth, const std::vector<int>& predicted, int k) {
  double total = 0.0;
  for (int c = 0; c < k; ++c) {
    int support = 0, hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] == c) {
        ++support;
        if (predicted[i] == c) ++hits;
      }
    }
    total += static_cast<double>(hits) / support;
  }
  return total / k;
}

// Average rank by counting, O(n^2).
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    int below = 0, equal = 0;
    for (double other : v) {
      if (other < v[i]) ++below;
      if (other == v[i]) ++equal;
    }
    r[i] = below + (equal + 1) / 2.0;
  }
  return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(ranks(a), ranks(b));
}

// Column-major columns of an n x m table given as rows.
inline std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t m) {
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r[m]);
  return out;
}

inline int first_argmax(const std::vector<double>& row) {
  int best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

// Plurality vote; ties broken by larger summed probability, then lower index.
inline int vote(const std::vector<std::vector<double>>& rows_per_table) {
  const std::size_t k = rows_per_table.front().size();
  std::vector<int> count(k, 0);
  std::vector<double> mass(k, 0.0);
  for (const auto& row : rows_per_table) {
    ++count[static_cast<std::size_t>(first_argmax(row))];
    for (std::size_t c = 0; c < k; ++c) mass[c] += row[c];
  }
  int best = -1;
  for (std::size_t c = 0; c < k; ++c) {
    if (best < 0) {
      best = static_cast<int>(c);
      continue;
    }
    const auto b = static_cast<std::size_t>(best);
    if (count[c] > count[b] || (count[c] == count[b] && mass[c] > mass[b])) best = static_cast<int>(c);
  }
  return best;
}

inline double normal_pdf(double mean, double std, double x) {
  const double z = (x - mean) / std;
  return std::exp(-0.5 * z * z) / (std * std::sqrt(2.0 * M_PI));
}

}  // namespace vbhead::oracle

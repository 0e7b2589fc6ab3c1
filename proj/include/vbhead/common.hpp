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
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vbhead {

inline constexpr std::string_view kVersion = "0.1.0";

// Raised for bad user input: malformed files, invalid arguments, shape
// mismatches. The CLI maps it to exit code 1; anything else is internal.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TaskKind { classification, regression };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view text);

// Seeded random source. Child streams are derived from (seed, index) so
// per-example or per-epoch sampling stays reproducible regardless of the
// order in which streams are consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  Rng(std::uint64_t seed, std::uint64_t stream);

  double normal();
  double uniform(double lo, double hi);
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Shortest-safe textual form used in every CSV file: 9 significant digits,
// locale independent.
std::string format_real(double value);
double parse_real(std::string_view text);
// Value as it will read back after a format_real/parse_real cycle.
double round_to_storage(double value);

}  // namespace vbhead

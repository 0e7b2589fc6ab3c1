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

#include "vbhead/common.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <system_error>

namespace vbhead {

std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::classification ? "classification" : "regression";
}

TaskKind parse_task_kind(std::string_view text) {
  if (text == "classification") return TaskKind::classification;
  if (text == "regression") return TaskKind::regression;
  throw Error("unknown task kind '" + std::string(text) + "'");
}

namespace {

std::seed_seq make_seed_seq(std::uint64_t seed, std::uint64_t stream, bool has_stream) {
  const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  if (!has_stream) return std::seed_seq{lo(seed), hi(seed)};
  return std::seed_seq{lo(seed), hi(seed), lo(stream), hi(stream), 0x9e3779b9u};
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  auto seq = make_seed_seq(seed, 0, false);
  engine_.seed(seq);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  auto seq = make_seed_seq(seed, stream, true);
  engine_.seed(seq);
}

double Rng::normal() { return normal_(engine_); }

double Rng::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

std::string format_real(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::general, 9);
  if (ec != std::errc()) throw std::logic_error("format_real: to_chars failed");
  return std::string(buf.data(), end);
}

double parse_real(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw Error("not a real number: '" + std::string(text) + "'");
  }
  return value;
}

double round_to_storage(double value) { return parse_real(format_real(value)); }

}  // namespace vbhead

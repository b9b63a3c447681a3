// Copyright 2026 The attnseg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "attnseg/smr.hpp"
#include "attnseg/types.hpp"
#include "reference.hpp"

namespace attnseg::testing {

inline std::vector<float> random_scores(std::mt19937& rng, std::size_t n) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Row-softmax of random logits; rows sum to 1 up to float rounding.
inline std::vector<float> random_self_attention(std::mt19937& rng, std::size_t pixels,
                                                double spread = 4.0) {
  std::normal_distribution<double> logit(0.0, spread);
  std::vector<float> m(pixels * pixels);
  std::vector<double> row(pixels);
  for (std::size_t p = 0; p < pixels; ++p) {
    double hi = -1e300;
    for (auto& x : row) hi = std::max(hi, x = logit(rng));
    double total = 0.0;
    for (auto& x : row) total += (x = std::exp(x - hi));
    for (std::size_t q = 0; q < pixels; ++q) m[p * pixels + q] = static_cast<float>(row[q] / total);
  }
  return m;
}

// Random blob-ish mask: a rectangle plus sprinkled pixels, sometimes empty.
inline BinaryMask random_mask(std::mt19937& rng, Resolution res) {
  std::uniform_int_distribution<std::size_t> rr(0, res.height - 1), cc(0, res.width - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BinaryMask m(res);
  if (u(rng) < 0.08) return m;
  std::size_t r0 = rr(rng), r1 = rr(rng), c0 = cc(rng), c1 = cc(rng);
  if (r0 > r1) std::swap(r0, r1);
  if (c0 > c1) std::swap(c0, c1);
  for (std::size_t r = r0; r <= r1; ++r) {
    for (std::size_t c = c0; c <= c1; ++c) m.set(r, c, true);
  }
  const double sprinkle = u(rng) * 0.1;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (u(rng) < sprinkle) m.set(i, true);
  }
  return m;
}

inline reference::Bits to_bits(const BinaryMask& m) {
  return {m.resolution().height, m.resolution().width,
          std::vector<std::uint8_t>(m.bits().begin(), m.bits().end())};
}

inline BinaryMask from_bits(const reference::Bits& b) {
  return BinaryMask(Resolution{b.h, b.w}, b.v);
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("attnseg_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// Every regular file below `root`, keyed by relative path, with contents.
inline std::vector<std::pair<std::string, std::string>> snapshot_tree(
    const std::filesystem::path& root) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) {
      out.emplace_back(std::filesystem::relative(e.path(), root).string(), read_file(e.path()));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace attnseg::testing

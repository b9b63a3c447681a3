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

// Subject-focused word aggregation. Each word of a phrase is weighted by the
// softmax of its embedding's dot product with the head noun's embedding.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "attnseg/error.hpp"
#include "attnseg/manifest.hpp"
#include "attnseg/types.hpp"

namespace attnseg {

enum class HeadWeighting {
  kSoftmax,     // plain softmax over all words, head included
  kPinnedHead,  // softmax over all words, then head weight forced to 1
};

struct WordWeights {
  std::vector<double> weights;
};

inline std::vector<double> head_similarities(std::span<const std::vector<float>> embeddings) {
  if (embeddings.empty()) throw ArgumentError("head_similarity_weights: no word embeddings");
  const auto& head = embeddings.back();
  std::vector<double> s;
  s.reserve(embeddings.size());
  for (const auto& v : embeddings) {
    if (v.size() != head.size()) {
      throw ShapeError("word embeddings differ in dimension");
    }
    double dot = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      dot += static_cast<double>(v[k]) * static_cast<double>(head[k]);
    }
    if (!std::isfinite(dot)) throw ArgumentError("non-finite word similarity");
    s.push_back(dot);
  }
  return s;
}

inline std::vector<double> softmax(std::span<const double> s) {
  const double hi = *std::max_element(s.begin(), s.end());
  std::vector<double> w(s.size());
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    w[i] = std::exp(s[i] - hi);
    total += w[i];
  }
  for (auto& x : w) x /= total;
  return w;
}

inline WordWeights head_similarity_weights(
    std::span<const std::vector<float>> embeddings,
    HeadWeighting mode = HeadWeighting::kSoftmax) {
  const auto s = head_similarities(embeddings);
  WordWeights w{softmax(s)};
  if (mode == HeadWeighting::kPinnedHead) w.weights.back() = 1.0;
  return w;
}

inline WordWeights head_similarity_weights(const PhraseSpec& phrase,
                                           HeadWeighting mode = HeadWeighting::kSoftmax) {
  return head_similarity_weights(phrase.word_embeddings, mode);
}

inline WordWeights uniform_weights(std::size_t n) {
  if (n == 0) throw ArgumentError("uniform_weights: no words");
  return WordWeights{std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

inline void require_same_maps(std::span<const ScoreMap> maps, const char* what) {
  if (maps.empty()) throw ArgumentError(std::string(what) + ": no maps given");
  for (const auto& m : maps) {
    if (m.resolution() != maps.front().resolution()) {
      throw ShapeError(std::string(what) + ": mixed resolutions");
    }
  }
}

// Elementwise sum of weights[i] * maps[i].
inline ScoreMap fuse_word_maps(std::span<const ScoreMap> maps, const WordWeights& weights) {
  require_same_maps(maps, "fuse_word_maps");
  if (maps.size() != weights.weights.size()) {
    throw ShapeError("fuse_word_maps: " + std::to_string(maps.size()) + " maps but " +
                     std::to_string(weights.weights.size()) + " weights");
  }
  const Resolution res = maps.front().resolution();
  std::vector<double> acc(res.area(), 0.0);
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const double w = weights.weights[k];
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * maps[k][i];
  }
  ScoreMap out(res);
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i]);
  return out;
}

// Elementwise product of all maps.
inline ScoreMap fuse_product(std::span<const ScoreMap> maps) {
  require_same_maps(maps, "fuse_product");
  const Resolution res = maps.front().resolution();
  std::vector<double> acc(res.area(), 1.0);
  for (const auto& m : maps) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] *= m[i];
  }
  ScoreMap out(res);
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i]);
  return out;
}

}  // namespace attnseg

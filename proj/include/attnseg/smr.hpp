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

// Mask refinement against a pool of class-agnostic candidate masks.
//
// s1 = |pred & cand| / (|pred| + eps) catches under-segmented predictions
// (the prediction sits mostly inside a larger candidate); s2 =
// |pred & cand| / |cand| catches over-segmented ones (the candidate sits
// mostly inside the prediction). Candidates with either score above tau are
// unioned; with no match the prediction is kept.

#include <cstddef>
#include <string>
#include <vector>

#include "attnseg/error.hpp"
#include "attnseg/manifest.hpp"
#include "attnseg/types.hpp"

namespace attnseg {

inline constexpr double kDefaultTau = 0.6;
inline constexpr double kDefaultEpsilon = 1e-6;

struct MatchScorePair {
  double s1 = 0.0;
  double s2 = 0.0;
};

inline MatchScorePair matching_scores(const BinaryMask& pred, const BinaryMask& candidate,
                                      double epsilon = kDefaultEpsilon) {
  require_same_resolution(pred, candidate, "matching_scores");
  if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be positive");
  const auto inter = static_cast<double>(intersection_count(pred, candidate));
  const auto pred_area = static_cast<double>(pred.count());
  const auto cand_area = static_cast<double>(candidate.count());
  MatchScorePair s;
  s.s1 = inter / (pred_area + epsilon);
  s.s2 = cand_area > 0.0 ? inter / cand_area : 0.0;
  return s;
}

inline bool is_match(const MatchScorePair& s, double tau) {
  return s.s1 > tau || s.s2 > tau;
}

// Indices of matched candidates, in pool order.
inline std::vector<std::size_t> matched_candidates(const BinaryMask& pred,
                                                   const CandidateMaskPool& pool,
                                                   double tau,
                                                   double epsilon = kDefaultEpsilon) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw ArgumentError("tau must lie in (0, 1), got " + std::to_string(tau));
  }
  std::vector<std::size_t> matched;
  for (std::size_t k = 0; k < pool.masks.size(); ++k) {
    if (is_match(matching_scores(pred, pool.masks[k], epsilon), tau)) matched.push_back(k);
  }
  return matched;
}

inline BinaryMask refine_mask(const BinaryMask& pred, const CandidateMaskPool& pool,
                              double tau = kDefaultTau, double epsilon = kDefaultEpsilon) {
  const auto matched = matched_candidates(pred, pool, tau, epsilon);
  if (matched.empty()) return pred;
  std::vector<std::uint8_t> bits(pred.size(), 0);
  for (std::size_t k : matched) {
    auto cand = pool.masks[k].bits();
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] |= cand[i];
  }
  return BinaryMask(pred.resolution(), std::move(bits));
}

}  // namespace attnseg

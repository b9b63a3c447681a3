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

// Locate-to-segment: cross-attention picks anchor pixels, self-attention rows
// of those anchors are pooled into an enhanced map, which is upsampled and
// thresholded into a mask.
//
// Numeric conventions (relied on by the reference tests): sums and
// interpolation run in double and are rounded to float once at the end;
// threshold comparisons promote the float score to double.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "attnseg/error.hpp"
#include "attnseg/types.hpp"

namespace attnseg {

inline constexpr double kDefaultBeta = 0.4;
inline constexpr double kDefaultAlpha = 0.3;
inline constexpr std::size_t kDefaultCrossResolution = 16;
inline constexpr std::size_t kDefaultSelfResolution = 32;

// Anchor pixels at a given grid resolution, sorted row-major.
struct AnchorSet {
  Resolution resolution;
  std::vector<Pixel> pixels;

  bool contains(Pixel p) const {
    return std::binary_search(pixels.begin(), pixels.end(), p);
  }
  bool subset_of(const AnchorSet& other) const {
    return std::includes(other.pixels.begin(), other.pixels.end(), pixels.begin(),
                         pixels.end());
  }
};

inline void require_open_unit(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) {
    throw ArgumentError(std::string(name) + " must lie in (0, 1), got " +
                        std::to_string(v));
  }
}

inline ScoreMap average_maps(std::span<const ScoreMap> maps) {
  if (maps.empty()) throw ArgumentError("average_maps: no maps given");
  const Resolution res = maps.front().resolution();
  std::vector<double> acc(res.area(), 0.0);
  for (const auto& m : maps) {
    if (m.resolution() != res) {
      throw ShapeError("average_maps: mixed resolutions " + to_string(res) + " and " +
                       to_string(m.resolution()));
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += m[i];
  }
  ScoreMap out(res);
  const double n = static_cast<double>(maps.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i] / n);
  return out;
}

// Min-max normalizes `values` into a map; a constant input yields zeros.
inline ScoreMap normalized_map(Resolution res, std::span<const double> values) {
  ScoreMap out(res);
  if (values.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = static_cast<float>((values[i] - lo) / range);
  }
  return out;
}

inline ScoreMap min_max_normalize(const ScoreMap& map) {
  std::vector<double> v(map.values().begin(), map.values().end());
  return normalized_map(map.resolution(), v);
}

// Replicates each cell into an integer-factor block.
inline ScoreMap upsample_nearest(const ScoreMap& map, Resolution target) {
  const auto& src = map.resolution();
  if (src.height == 0 || src.width == 0 || target.height % src.height != 0 ||
      target.width % src.width != 0 || target.height < src.height ||
      target.width < src.width) {
    throw ShapeError("nearest upsampling needs an integer multiple: " + to_string(src) +
                     " -> " + to_string(target));
  }
  const std::size_t fy = target.height / src.height;
  const std::size_t fx = target.width / src.width;
  ScoreMap out(target);
  for (std::size_t r = 0; r < target.height; ++r) {
    for (std::size_t c = 0; c < target.width; ++c) out(r, c) = map(r / fy, c / fx);
  }
  return out;
}

// Pixels with score strictly above `beta`. May be empty.
inline AnchorSet threshold_pixels(const ScoreMap& map, double beta) {
  AnchorSet s{map.resolution(), {}};
  for (std::size_t r = 0; r < map.height(); ++r) {
    for (std::size_t c = 0; c < map.width(); ++c) {
      if (static_cast<double>(map(r, c)) > beta) s.pixels.push_back({r, c});
    }
  }
  return s;
}

inline Pixel argmax_pixel(const ScoreMap& map) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < map.size(); ++i) {
    if (map[i] > map[best]) best = i;
  }
  return {best / map.width(), best % map.width()};
}

// Upsamples `cross` (nearest) to `target` and keeps pixels scoring above
// `beta`. Falls back to the row-major-first argmax pixel when none qualify.
inline AnchorSet select_anchors(const ScoreMap& cross, double beta, Resolution target) {
  require_open_unit(beta, "beta");
  const ScoreMap up = upsample_nearest(cross, target);
  AnchorSet s = threshold_pixels(up, beta);
  if (s.pixels.empty()) s.pixels.push_back(argmax_pixel(up));
  return s;
}

inline ScoreMap aggregate_self_attention(const AnchorSet& anchors,
                                         const SelfAttentionMatrix& self_attn) {
  const Resolution res = self_attn.resolution();
  if (anchors.resolution != res) {
    throw ShapeError("anchors at " + to_string(anchors.resolution) +
                     " but self-attention is " + to_string(res));
  }
  std::vector<double> sum(res.area(), 0.0);
  for (const Pixel& p : anchors.pixels) {
    if (p.row >= res.height || p.col >= res.width) {
      throw ArgumentError("anchor (" + std::to_string(p.row) + "," +
                          std::to_string(p.col) + ") outside " + to_string(res));
    }
    const auto row = self_attn.row(p);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += row[i];
  }
  return normalized_map(res, sum);
}

// Bilinear resize with pixel-center sampling (corners not aligned) and edge
// clamping.
inline ScoreMap upsample_bilinear(const ScoreMap& map, Resolution target) {
  const auto& src = map.resolution();
  if (target.height < src.height || target.width < src.width || src.area() == 0) {
    throw ShapeError("bilinear upsampling cannot shrink " + to_string(src) + " -> " +
                     to_string(target));
  }
  const double sy = static_cast<double>(src.height) / static_cast<double>(target.height);
  const double sx = static_cast<double>(src.width) / static_cast<double>(target.width);

  struct Tap {
    std::size_t lo, hi;
    double w;
  };
  auto taps = [](std::size_t n_dst, std::size_t n_src, double scale) {
    std::vector<Tap> t(n_dst);
    const double max_pos = static_cast<double>(n_src - 1);
    for (std::size_t i = 0; i < n_dst; ++i) {
      double pos = (static_cast<double>(i) + 0.5) * scale - 0.5;
      pos = std::clamp(pos, 0.0, max_pos);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, n_src - 1);
      t[i] = {lo, hi, pos - static_cast<double>(lo)};
    }
    return t;
  };
  const auto ty = taps(target.height, src.height, sy);
  const auto tx = taps(target.width, src.width, sx);

  ScoreMap out(target);
  for (std::size_t r = 0; r < target.height; ++r) {
    const auto& y = ty[r];
    for (std::size_t c = 0; c < target.width; ++c) {
      const auto& x = tx[c];
      const double top = (1.0 - x.w) * map(y.lo, x.lo) + x.w * map(y.lo, x.hi);
      const double bottom = (1.0 - x.w) * map(y.hi, x.lo) + x.w * map(y.hi, x.hi);
      out(r, c) = static_cast<float>((1.0 - y.w) * top + y.w * bottom);
    }
  }
  return out;
}

inline BinaryMask binarize(const ScoreMap& map, double alpha) {
  require_open_unit(alpha, "alpha");
  BinaryMask mask(map.resolution());
  for (std::size_t i = 0; i < map.size(); ++i) {
    mask.set(i, static_cast<double>(map[i]) > alpha);
  }
  return mask;
}

// Anchors from `cross` pooled through `self_attn`; result lives at the
// self-attention resolution.
inline ScoreMap enhance(const ScoreMap& cross, const SelfAttentionMatrix& self_attn,
                        double beta) {
  const AnchorSet anchors = select_anchors(cross, beta, self_attn.resolution());
  return aggregate_self_attention(anchors, self_attn);
}

inline BinaryMask segment(const ScoreMap& enhanced, Resolution image_size, double alpha) {
  return binarize(upsample_bilinear(enhanced, image_size), alpha);
}

}  // namespace attnseg

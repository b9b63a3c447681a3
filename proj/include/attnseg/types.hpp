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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "attnseg/error.hpp"

namespace attnseg {

struct Resolution {
  std::size_t height = 0;
  std::size_t width = 0;

  constexpr std::size_t area() const noexcept { return height * width; }
  friend constexpr bool operator==(const Resolution&, const Resolution&) = default;
};

inline std::string to_string(const Resolution& r) {
  return std::to_string(r.height) + "x" + std::to_string(r.width);
}

// A pixel coordinate; ordering is row-major.
struct Pixel {
  std::size_t row = 0;
  std::size_t col = 0;

  friend constexpr auto operator<=>(const Pixel&, const Pixel&) = default;
};

// Dense row-major grid of float scores.
class ScoreMap {
 public:
  ScoreMap() = default;
  ScoreMap(Resolution res, float fill = 0.0f)
      : res_(res), values_(res.area(), fill) {}
  ScoreMap(Resolution res, std::vector<float> values)
      : res_(res), values_(std::move(values)) {
    if (values_.size() != res_.area()) {
      throw ShapeError("score map " + to_string(res_) + " needs " +
                       std::to_string(res_.area()) + " values, got " +
                       std::to_string(values_.size()));
    }
  }

  const Resolution& resolution() const noexcept { return res_; }
  std::size_t height() const noexcept { return res_.height; }
  std::size_t width() const noexcept { return res_.width; }
  std::size_t size() const noexcept { return values_.size(); }

  float operator()(std::size_t row, std::size_t col) const {
    return values_[row * res_.width + col];
  }
  float& operator()(std::size_t row, std::size_t col) {
    return values_[row * res_.width + col];
  }
  float operator[](std::size_t i) const { return values_[i]; }
  float& operator[](std::size_t i) { return values_[i]; }

  std::span<const float> values() const noexcept { return values_; }
  std::span<float> values() noexcept { return values_; }

  friend bool operator==(const ScoreMap&, const ScoreMap&) = default;

 private:
  Resolution res_;
  std::vector<float> values_;
};

// Pixel-to-pixel attention. Row `p` (row-major pixel index) is the attention
// map of pixel p over all pixels of the same grid.
class SelfAttentionMatrix {
 public:
  SelfAttentionMatrix() = default;
  SelfAttentionMatrix(Resolution res, std::vector<float> values)
      : res_(res), values_(std::move(values)) {
    if (values_.size() != res_.area() * res_.area()) {
      throw ShapeError("self-attention " + to_string(res_) + " needs " +
                       std::to_string(res_.area() * res_.area()) +
                       " values, got " + std::to_string(values_.size()));
    }
  }

  const Resolution& resolution() const noexcept { return res_; }
  std::size_t pixels() const noexcept { return res_.area(); }

  std::span<const float> row(std::size_t pixel) const {
    return std::span<const float>(values_).subspan(pixel * res_.area(),
                                                   res_.area());
  }
  std::span<const float> row(Pixel p) const {
    return row(p.row * res_.width + p.col);
  }
  std::span<const float> values() const noexcept { return values_; }

 private:
  Resolution res_;
  std::vector<float> values_;
};

// Boolean grid stored as one byte per pixel with values {0, 1}.
class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(Resolution res, bool fill = false)
      : res_(res), bits_(res.area(), fill ? 1 : 0) {}
  BinaryMask(Resolution res, std::vector<std::uint8_t> bits)
      : res_(res), bits_(std::move(bits)) {
    if (bits_.size() != res_.area()) {
      throw ShapeError("mask " + to_string(res_) + " needs " +
                       std::to_string(res_.area()) + " pixels, got " +
                       std::to_string(bits_.size()));
    }
    for (auto& b : bits_) b = b ? 1 : 0;
  }

  const Resolution& resolution() const noexcept { return res_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool operator()(std::size_t row, std::size_t col) const {
    return bits_[row * res_.width + col] != 0;
  }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
  void set(std::size_t row, std::size_t col, bool v) {
    set(row * res_.width + col, v);
  }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  std::size_t count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
  }
  bool empty() const { return count() == 0; }

  // True when every set pixel of *this is also set in `other`.
  bool subset_of(const BinaryMask& other) const {
    if (other.res_ != res_) return false;
    for (std::size_t i = 0; i < bits_.size(); ++i) {
      if (bits_[i] && !other.bits_[i]) return false;
    }
    return true;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  Resolution res_;
  std::vector<std::uint8_t> bits_;
};

inline void require_same_resolution(const BinaryMask& a, const BinaryMask& b,
                                    const char* what) {
  if (a.resolution() != b.resolution()) {
    throw ShapeError(std::string(what) + ": resolution mismatch " +
                     to_string(a.resolution()) + " vs " +
                     to_string(b.resolution()));
  }
}

inline std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b) {
  require_same_resolution(a, b, "intersection");
  auto x = a.bits();
  auto y = b.bits();
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) n += (x[i] & y[i]);
  return n;
}

inline std::size_t union_count(const BinaryMask& a, const BinaryMask& b) {
  require_same_resolution(a, b, "union");
  auto x = a.bits();
  auto y = b.bits();
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) n += (x[i] | y[i]);
  return n;
}

}  // namespace attnseg

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

// ATSB tensor container.
//
//   offset  size  field
//   0       4     magic "ATSB"
//   4       2     version, little-endian u16 (currently 1)
//   6       4     header_len, little-endian u32
//   10      n     UTF-8 JSON {"dtype":"f32","layout":"row-major","shape":[...]}
//   10+n    4*N   little-endian IEEE-754 float32 payload, row-major
//
// N is the product of shape; every shape entry must be positive.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnseg/error.hpp"
#include "attnseg/types.hpp"

namespace attnseg {

inline constexpr std::array<char, 4> kTensorMagic = {'A', 'T', 'S', 'B'};
inline constexpr std::uint16_t kTensorVersion = 1;

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> values;
};

namespace detail {

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::size_t shape_product(std::span<const std::size_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

inline std::string tensor_header(std::span<const std::size_t> shape) {
  nlohmann::json h;
  h["dtype"] = "f32";
  h["layout"] = "row-major";
  h["shape"] = std::vector<std::size_t>(shape.begin(), shape.end());
  return h.dump();
}

}  // namespace detail

// Serializes `values` with the given shape. The whole file is assembled in
// memory and written in one go.
inline std::vector<char> encode_tensor(std::span<const std::size_t> shape,
                                       std::span<const float> values) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dim");
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor shape entries must be positive");
  }
  if (detail::shape_product(shape) != values.size()) {
    throw ShapeError("tensor has " + std::to_string(values.size()) +
                     " values but shape product is " +
                     std::to_string(detail::shape_product(shape)));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw NonFiniteError(i);
  }

  const std::string header = detail::tensor_header(shape);
  std::vector<char> out(10 + header.size() + 4 * values.size());
  char* p = out.data();
  auto put = [&p](std::uint32_t v, int bytes) {
    for (int k = 0; k < bytes; ++k) *p++ = static_cast<char>((v >> (8 * k)) & 0xff);
  };
  p = std::copy(kTensorMagic.begin(), kTensorMagic.end(), p);
  put(kTensorVersion, 2);
  put(static_cast<std::uint32_t>(header.size()), 4);
  p = std::copy(header.begin(), header.end(), p);
  for (float v : values) put(std::bit_cast<std::uint32_t>(v), 4);
  return out;
}

inline Tensor decode_tensor(std::span<const char> bytes,
                            const std::string& origin = "<memory>") {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 10) throw FormatError(origin + ": truncated tensor header");
  if (!std::equal(kTensorMagic.begin(), kTensorMagic.end(), bytes.begin())) {
    throw FormatError(origin + ": bad magic");
  }
  const std::uint16_t version = static_cast<std::uint16_t>(p[4] | (p[5] << 8));
  if (version != kTensorVersion) {
    throw FormatError(origin + ": unsupported version " + std::to_string(version));
  }
  const std::uint32_t header_len = detail::get_u32(p + 6);
  if (bytes.size() < 10 + static_cast<std::size_t>(header_len)) {
    throw FormatError(origin + ": header length exceeds file size");
  }

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 10, bytes.begin() + 10 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(origin + ": header is not valid JSON: " + e.what());
  }
  if (!header.is_object() || header.value("dtype", "") != "f32") {
    throw FormatError(origin + ": dtype must be \"f32\"");
  }
  if (header.value("layout", "") != "row-major") {
    throw FormatError(origin + ": layout must be \"row-major\"");
  }
  const auto shape_it = header.find("shape");
  if (shape_it == header.end() || !shape_it->is_array() || shape_it->empty()) {
    throw FormatError(origin + ": shape must be a nonempty array");
  }
  Tensor t;
  for (const auto& d : *shape_it) {
    if (!d.is_number_integer() || d.get<long long>() <= 0) {
      throw FormatError(origin + ": shape entries must be positive integers");
    }
    t.shape.push_back(d.get<std::size_t>());
  }

  const std::size_t count = detail::shape_product(t.shape);
  const std::size_t payload = bytes.size() - 10 - header_len;
  if (payload != 4 * count) {
    throw FormatError(origin + ": payload length mismatch, header implies " +
                      std::to_string(4 * count) + " bytes, found " +
                      std::to_string(payload));
  }
  t.values.resize(count);
  const unsigned char* data = p + 10 + header_len;
  for (std::size_t i = 0; i < count; ++i) {
    t.values[i] = std::bit_cast<float>(detail::get_u32(data + 4 * i));
    if (!std::isfinite(t.values[i])) throw NonFiniteError(i);
  }
  return t;
}

inline void write_tensor(std::span<const std::size_t> shape,
                         std::span<const float> values,
                         const std::filesystem::path& path) {
  const auto bytes = encode_tensor(shape, values);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path.string(), "write failed");
}

inline Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return decode_tensor(bytes, path.string());
}

inline void write_score_map(const ScoreMap& map, const std::filesystem::path& path) {
  const std::array<std::size_t, 2> shape = {map.height(), map.width()};
  write_tensor(shape, map.values(), path);
}

inline ScoreMap read_score_map(const std::filesystem::path& path) {
  Tensor t = read_tensor(path);
  if (t.shape.size() != 2) {
    throw ShapeError(path.string() + ": score map must be 2-D, got " +
                     std::to_string(t.shape.size()) + " dims");
  }
  return ScoreMap({t.shape[0], t.shape[1]}, std::move(t.values));
}

inline void write_self_attention(const SelfAttentionMatrix& m,
                                 const std::filesystem::path& path) {
  const auto& r = m.resolution();
  const std::array<std::size_t, 4> shape = {r.height, r.width, r.height, r.width};
  write_tensor(shape, m.values(), path);
}

// Self-attention files are 4-D [h, w, h, w]. Rows must be nonnegative and sum
// to 1 within `row_tolerance`.
inline SelfAttentionMatrix read_self_attention(const std::filesystem::path& path,
                                               double row_tolerance = 1e-4) {
  Tensor t = read_tensor(path);
  if (t.shape.size() != 4 || t.shape[0] != t.shape[2] || t.shape[1] != t.shape[3]) {
    throw ShapeError(path.string() + ": self-attention must have shape [h,w,h,w]");
  }
  SelfAttentionMatrix m({t.shape[0], t.shape[1]}, std::move(t.values));
  for (std::size_t p = 0; p < m.pixels(); ++p) {
    double sum = 0.0;
    for (float v : m.row(p)) {
      if (v < 0.0f) {
        throw FormatError(path.string() + ": negative attention in row " +
                          std::to_string(p));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > row_tolerance) {
      throw FormatError(path.string() + ": row " + std::to_string(p) +
                        " sums to " + std::to_string(sum));
    }
  }
  return m;
}

}  // namespace attnseg

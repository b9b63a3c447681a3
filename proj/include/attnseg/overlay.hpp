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
#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "attnseg/error.hpp"
#include "attnseg/types.hpp"

namespace attnseg {

inline constexpr double kOverlayOpacity = 0.5;

// 64-bit FNV-1a; stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// BGR color derived from the phrase id. Channels stay in [64, 255].
inline cv::Vec3b phrase_color(std::string_view phrase_id) {
  const std::uint64_t h = fnv1a(phrase_id);
  cv::Vec3b c;
  for (int k = 0; k < 3; ++k) {
    c[k] = static_cast<std::uint8_t>(64 + ((h >> (8 * k)) & 0xff) % 192);
  }
  return c;
}

inline cv::Mat load_image(const std::filesystem::path& path) {
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (img.empty()) throw IoError(path.string(), "cannot decode image");
  return img;
}

// Tints masked pixels with the phrase color and writes the label in the
// top-left corner. `image` must be 8-bit BGR at the mask's resolution.
inline cv::Mat render_overlay(const cv::Mat& image, const BinaryMask& mask,
                              const std::string& phrase_id, const std::string& label) {
  if (image.type() != CV_8UC3) throw FormatError("overlay image must be 8-bit BGR");
  const Resolution img_res{static_cast<std::size_t>(image.rows),
                           static_cast<std::size_t>(image.cols)};
  if (img_res != mask.resolution()) {
    throw ShapeError("overlay: image is " + to_string(img_res) + ", mask is " +
                     to_string(mask.resolution()));
  }
  const cv::Vec3b color = phrase_color(phrase_id);
  cv::Mat out = image.clone();
  for (int r = 0; r < out.rows; ++r) {
    auto* row = out.ptr<cv::Vec3b>(r);
    for (int c = 0; c < out.cols; ++c) {
      if (!mask(static_cast<std::size_t>(r), static_cast<std::size_t>(c))) continue;
      for (int k = 0; k < 3; ++k) {
        row[c][k] = cv::saturate_cast<std::uint8_t>((1.0 - kOverlayOpacity) * row[c][k] +
                                                    kOverlayOpacity * color[k]);
      }
    }
  }

  if (!label.empty()) {
    const int font = cv::FONT_HERSHEY_SIMPLEX;
    const double scale = std::max(0.3, out.cols / 1024.0);
    int baseline = 0;
    const cv::Size text = cv::getTextSize(label, font, scale, 1, &baseline);
    cv::rectangle(out, cv::Point(0, 0), cv::Point(text.width + 6, text.height + baseline + 6),
                  cv::Scalar(0, 0, 0), cv::FILLED);
    cv::putText(out, label, cv::Point(3, text.height + 3), font, scale,
                cv::Scalar(color[0], color[1], color[2]), 1, cv::LINE_8);
  }
  return out;
}

inline void write_image(const cv::Mat& image, const std::filesystem::path& path) {
  if (!cv::imwrite(path.string(), image)) throw IoError(path.string(), "cannot write image");
}

}  // namespace attnseg

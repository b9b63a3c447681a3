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

// Masks on disk are 8-bit single-channel PNGs holding only 0 and 255.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "attnseg/error.hpp"
#include "attnseg/types.hpp"

namespace attnseg {

inline BinaryMask read_mask_png(const std::filesystem::path& path) {
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (img.empty()) throw IoError(path.string(), "cannot decode mask image");
  if (img.type() != CV_8UC1) {
    throw FormatError(path.string() + ": mask must be 8-bit single-channel");
  }
  Resolution res{static_cast<std::size_t>(img.rows), static_cast<std::size_t>(img.cols)};
  std::vector<std::uint8_t> bits(res.area());
  for (int r = 0; r < img.rows; ++r) {
    const auto* row = img.ptr<std::uint8_t>(r);
    for (int c = 0; c < img.cols; ++c) {
      const std::uint8_t v = row[c];
      if (v != 0 && v != 255) {
        throw FormatError(path.string() + ": mask pixel (" + std::to_string(r) +
                          "," + std::to_string(c) + ") has value " +
                          std::to_string(v) + ", expected 0 or 255");
      }
      bits[static_cast<std::size_t>(r) * res.width + static_cast<std::size_t>(c)] =
          v ? 1 : 0;
    }
  }
  return BinaryMask(res, std::move(bits));
}

inline cv::Mat mask_to_mat(const BinaryMask& mask) {
  const auto& r = mask.resolution();
  cv::Mat img(static_cast<int>(r.height), static_cast<int>(r.width), CV_8UC1);
  auto bits = mask.bits();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    img.data[i] = bits[i] ? 255 : 0;
  }
  return img;
}

inline void write_mask_png(const BinaryMask& mask, const std::filesystem::path& path) {
  if (!cv::imwrite(path.string(), mask_to_mat(mask))) {
    throw IoError(path.string(), "cannot write mask image");
  }
}

}  // namespace attnseg

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

// Writes the synthetic golden fixture: two 128x128 scenes with 16x16
// cross-attention, 32x32 self-attention, candidate pools and ground truth.
//
// Each phrase carries planted errors that a specific stage repairs:
//   - cross-attention covers only part of the object (under-segmentation),
//     which self-attention pooling over the object's segment fills in;
//   - a weak off-target blob (noise) that survives binarization of the raw
//     cross map but sits below the anchor threshold;
//   - blocky 32x32 segment boundaries that candidate masks snap to the true
//     outline.
//
// Usage: attnseg_make_fixture <out_dir>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "attnseg/mask_io.hpp"
#include "attnseg/tensor_file.hpp"

namespace fs = std::filesystem;
using attnseg::BinaryMask;
using attnseg::Resolution;

namespace {

constexpr std::size_t kImage = 128;
constexpr std::size_t kSelf = 32;
constexpr std::size_t kCross = 16;

// Shape predicate over continuous image coordinates (row, col).
using Shape = std::function<bool(double, double)>;

class Noise {
 public:
  explicit Noise(std::uint32_t seed) : gen_(seed) {}
  // Uniform in [0, 1) built from raw engine output, so it is identical on
  // every standard library.
  double next() { return static_cast<double>(gen_() >> 8) / 16777216.0; }

 private:
  std::mt19937 gen_;
};

BinaryMask rasterize(const Shape& s) {
  BinaryMask m(Resolution{kImage, kImage});
  for (std::size_t r = 0; r < kImage; ++r) {
    for (std::size_t c = 0; c < kImage; ++c) m.set(r, c, s(r + 0.5, c + 0.5));
  }
  return m;
}

struct Token {
  std::string word;
  // Cross-attention score at a 16x16 cell center (image coordinates).
  std::function<double(double, double)> score;
};

struct PhraseDef {
  std::string id;
  std::string text;
  std::vector<std::size_t> tokens;
  std::vector<std::vector<float>> embeddings;
  bool plural;
  bool thing;
  Shape gt;
};

struct Scene {
  std::string id;
  std::uint32_t seed;
  // Segments, by priority; the self-attention grid labels each cell with the
  // first segment containing its center, else background.
  std::vector<Shape> segments;
  std::vector<cv::Vec3b> segment_colors;
  cv::Vec3b background_color;
  std::vector<Token> tokens;
  std::vector<PhraseDef> phrases;
  std::vector<Shape> candidates;
};

void write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

void write_scene(const Scene& scene, const fs::path& root) {
  const fs::path dir = root / scene.id;
  fs::create_directories(dir / "cross");
  fs::create_directories(dir / "pool");
  fs::create_directories(dir / "gt");
  Noise noise(scene.seed);

  auto label_at = [&](double r, double c) -> int {
    for (std::size_t k = 0; k < scene.segments.size(); ++k) {
      if (scene.segments[k](r, c)) return static_cast<int>(k) + 1;
    }
    return 0;
  };

  cv::Mat image(kImage, kImage, CV_8UC3);
  for (std::size_t r = 0; r < kImage; ++r) {
    for (std::size_t c = 0; c < kImage; ++c) {
      const int l = label_at(r + 0.5, c + 0.5);
      cv::Vec3b col = l ? scene.segment_colors[l - 1] : scene.background_color;
      const int jitter = static_cast<int>(noise.next() * 16.0) - 8;
      for (int k = 0; k < 3; ++k) col[k] = cv::saturate_cast<std::uint8_t>(col[k] + jitter);
      image.at<cv::Vec3b>(static_cast<int>(r), static_cast<int>(c)) = col;
    }
  }
  cv::imwrite((dir / "image.png").string(), image);

  // Self-attention: each pixel attends mostly to its own segment.
  const double cell = static_cast<double>(kImage) / kSelf;
  std::vector<int> labels(kSelf * kSelf);
  for (std::size_t p = 0; p < labels.size(); ++p) {
    labels[p] = label_at((p / kSelf + 0.5) * cell, (p % kSelf + 0.5) * cell);
  }
  std::vector<float> self(labels.size() * labels.size());
  for (std::size_t p = 0; p < labels.size(); ++p) {
    std::size_t same = 0;
    for (int l : labels) same += (l == labels[p]);
    std::vector<double> row(labels.size());
    double total = 0.0;
    for (std::size_t q = 0; q < labels.size(); ++q) {
      row[q] = (labels[q] == labels[p] ? 0.9 / same : 0.0) + 0.1 / labels.size() +
               1e-5 * noise.next();
      total += row[q];
    }
    for (std::size_t q = 0; q < labels.size(); ++q) {
      self[p * labels.size() + q] = static_cast<float>(row[q] / total);
    }
  }
  attnseg::write_self_attention(
      attnseg::SelfAttentionMatrix(Resolution{kSelf, kSelf}, std::move(self)),
      dir / "self.atsb");

  nlohmann::json cross_paths = nlohmann::json::array();
  const double ccell = static_cast<double>(kImage) / kCross;
  for (std::size_t t = 0; t < scene.tokens.size(); ++t) {
    attnseg::ScoreMap m(Resolution{kCross, kCross});
    for (std::size_t r = 0; r < kCross; ++r) {
      for (std::size_t c = 0; c < kCross; ++c) {
        m(r, c) = static_cast<float>(
            scene.tokens[t].score((r + 0.5) * ccell, (c + 0.5) * ccell) + 0.02 * noise.next());
      }
    }
    const std::string rel = "cross/" + std::to_string(t) + "_" + scene.tokens[t].word + ".atsb";
    attnseg::write_score_map(m, dir / rel);
    cross_paths.push_back(rel);
  }

  for (std::size_t k = 0; k < scene.candidates.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "cand_%02zu.png", k);
    attnseg::write_mask_png(rasterize(scene.candidates[k]), dir / "pool" / name);
  }

  nlohmann::json phrases = nlohmann::json::array();
  nlohmann::json gt = nlohmann::json::object();
  for (const auto& p : scene.phrases) {
    phrases.push_back({{"phrase_id", p.id},
                       {"text", p.text},
                       {"word_token_ids", p.tokens},
                       {"head_index", p.tokens.size() - 1},
                       {"word_embeddings", p.embeddings},
                       {"is_plural", p.plural},
                       {"is_thing", p.thing}});
    const std::string rel = "gt/" + p.id + ".png";
    attnseg::write_mask_png(rasterize(p.gt), dir / rel);
    gt[p.id] = rel;
  }

  write_json(dir / "manifest.json",
             {{"sample_id", scene.id},
              {"image_path", "image.png"},
              {"image_size", {kImage, kImage}},
              {"cross_attention_paths", cross_paths},
              {"self_attention_path", "self.atsb"},
              {"candidate_pool_path", "pool"},
              {"candidate_count", scene.candidates.size()},
              {"phrases", phrases},
              {"gt_mask_paths", gt}});
}

double sq(double x) { return x * x; }

Scene park() {
  Shape sky = [](double r, double c) { return r < 36.0 + 4.0 * std::sin(c / 9.0); };
  Shape ball = [](double r, double c) { return sq(r - 84) + sq(c - 36) < sq(20); };
  Shape dog1 = [](double r, double c) { return sq(r - 76) + sq(c - 94) < sq(13); };
  Shape dog2 = [](double r, double c) { return sq(r - 108) + sq(c - 106) < sq(11); };
  Shape dogs = [=](double r, double c) { return dog1(r, c) || dog2(r, c); };
  Shape grass = [=](double r, double c) { return !sky(r, c) && !ball(r, c) && !dogs(r, c); };
  // Weak blob on the grass between the ball and the dogs.
  auto blob = [](double r, double c) { return r > 100 && r < 116 && c > 56 && c < 76; };

  Scene s;
  s.id = "park";
  s.seed = 7;
  s.segments = {sky, ball, dogs};
  s.segment_colors = {{235, 206, 135}, {40, 40, 220}, {60, 100, 140}};
  s.background_color = {50, 160, 60};
  s.tokens = {
      {"the", [](double, double) { return 0.2; }},
      {"sky", [=](double r, double c) {
         if (sky(r, c) && c < 60) return 0.9;
         if (blob(r, c)) return 0.36;
         return 0.05;
       }},
      {"a", [](double, double) { return 0.15; }},
      {"red", [=](double r, double c) { return ball(r, c) && c < 40 ? 0.6 : 0.1; }},
      {"ball", [=](double r, double c) {
         if (ball(r, c) && c < 36) return 0.9;
         if (blob(r, c)) return 0.36;
         return 0.05;
       }},
      {"two", [=](double r, double c) { return dogs(r, c) ? 0.4 : 0.2; }},
      {"dogs", [=](double r, double c) {
         if (dog1(r, c)) return 0.9;
         if (blob(r, c)) return 0.36;
         return 0.05;
       }},
  };
  s.phrases = {
      {"sky", "the sky", {0, 1}, {{0.1f, 0.0f, 0.1f, 0.0f}, {1.0f, 0.2f, 0.0f, 0.1f}}, false, false, sky},
      {"ball", "a red ball", {2, 3, 4},
       {{0.0f, 0.1f, 0.1f, 0.0f}, {0.4f, 0.6f, 0.0f, 0.0f}, {0.3f, 1.2f, 0.2f, 0.0f}}, false, true, ball},
      {"dogs", "two dogs", {5, 6}, {{0.2f, 0.0f, 0.5f, 0.1f}, {0.0f, 0.1f, 1.3f, 0.3f}}, true, true, dogs},
  };
  Shape ball_left = [=](double r, double c) { return ball(r, c) && c < 36; };
  Shape stone = [](double r, double c) { return sq(r - 60) + sq(c - 20) < sq(4); };
  s.candidates = {sky, ball, ball_left, dog1, dog2, grass, stone};
  return s;
}

Scene kitchen() {
  Shape window = [](double r, double c) { return r > 10 && r < 30 && c > 80 && c < 112; };
  Shape wall = [=](double r, double c) {
    return r < 48.0 + 3.0 * std::cos(c / 11.0) && !window(r, c);
  };
  Shape table = [](double r, double c) {
    return r > 70 && r < 108 && c > 18 + 0.1 * (r - 70) && c < 102 - 0.1 * (r - 70);
  };
  Shape floor = [=](double r, double c) { return !wall(r, c) && !window(r, c) && !table(r, c); };
  auto blob = [](double r, double c) { return r > 112 && c > 8 && c < 32; };

  Scene s;
  s.id = "kitchen";
  s.seed = 11;
  s.segments = {window, wall, table};
  s.segment_colors = {{250, 230, 200}, {180, 190, 200}, {30, 80, 130}};
  s.background_color = {120, 120, 120};
  s.tokens = {
      {"the", [](double, double) { return 0.2; }},
      {"wall", [=](double r, double c) {
         if (wall(r, c) && c < 70) return 0.85;
         if (blob(r, c)) return 0.35;
         return 0.05;
       }},
      {"a", [](double, double) { return 0.2; }},
      {"wooden", [=](double r, double c) { return table(r, c) ? 0.5 : 0.1; }},
      {"table", [=](double r, double c) {
         if (table(r, c) && r < 88) return 0.9;
         if (blob(r, c)) return 0.36;
         return 0.05;
       }},
      {"window", [=](double r, double c) {
         if (window(r, c) && c < 100) return 0.8;
         if (blob(r, c)) return 0.34;
         return 0.05;
       }},
  };
  s.phrases = {
      {"wall", "the wall", {0, 1}, {{0.1f, 0.1f, 0.0f, 0.0f}, {0.9f, 0.1f, 0.3f, 0.0f}}, false, false, wall},
      {"table", "a wooden table", {2, 3, 4},
       {{0.0f, 0.0f, 0.2f, 0.1f}, {0.3f, 0.5f, 0.0f, 0.4f}, {0.1f, 0.9f, 0.1f, 0.8f}}, false, true, table},
      {"window", "window", {5}, {{0.5f, 0.5f, 0.5f, 0.5f}}, false, true, window},
  };
  // No candidate covers the window, so its refinement falls back.
  s.candidates = {wall, table, floor};
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: attnseg_make_fixture <out_dir>\n";
    return 1;
  }
  const fs::path root = argv[1];
  try {
    fs::create_directories(root);
    nlohmann::json batch = {{"samples", nlohmann::json::array()}};
    for (const Scene& s : {park(), kitchen()}) {
      write_scene(s, root);
      batch["samples"].push_back(s.id + "/manifest.json");
    }
    write_json(root / "batch.json", batch);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

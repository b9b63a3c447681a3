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

// Per-sample orchestration: word aggregation, locate-to-segment, optional
// candidate refinement, scoring against ground truth, and the batch runner
// that writes a run directory.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "attnseg/error.hpp"
#include "attnseg/eval.hpp"
#include "attnseg/lsp.hpp"
#include "attnseg/manifest.hpp"
#include "attnseg/mask_io.hpp"
#include "attnseg/overlay.hpp"
#include "attnseg/sffa.hpp"
#include "attnseg/smr.hpp"
#include "attnseg/types.hpp"

namespace attnseg {

enum class Aggregator { kSubjectFocused, kAverage, kMultiplication };
enum class FusionStage { kCross, kEnhanced };

inline const char* to_string(Aggregator a) {
  switch (a) {
    case Aggregator::kSubjectFocused: return "subject_focused";
    case Aggregator::kAverage: return "average";
    case Aggregator::kMultiplication: return "multiplication";
  }
  return "?";
}

inline const char* to_string(FusionStage f) {
  return f == FusionStage::kCross ? "cross" : "enhanced";
}

inline Aggregator parse_aggregator(const std::string& s) {
  if (s == "subject_focused") return Aggregator::kSubjectFocused;
  if (s == "average") return Aggregator::kAverage;
  if (s == "multiplication") return Aggregator::kMultiplication;
  throw ArgumentError("unknown aggregator '" + s + "'");
}

inline FusionStage parse_fusion_stage(const std::string& s) {
  if (s == "cross") return FusionStage::kCross;
  if (s == "enhanced") return FusionStage::kEnhanced;
  throw ArgumentError("unknown fusion stage '" + s + "'");
}

struct PipelineConfig {
  double beta = kDefaultBeta;
  double alpha = kDefaultAlpha;
  double tau = kDefaultTau;
  double epsilon = kDefaultEpsilon;
  std::size_t cross_resolution = kDefaultCrossResolution;
  std::size_t self_resolution = kDefaultSelfResolution;
  Aggregator aggregator = Aggregator::kSubjectFocused;
  FusionStage fusion_stage = FusionStage::kCross;
  HeadWeighting head_weighting = HeadWeighting::kSoftmax;
  // Min-max normalize the aggregated cross-attention before thresholding.
  bool normalize_cross = true;
  // false gives the cross-attention-only baseline.
  bool lsp_enabled = true;
  bool smr_enabled = true;
  double grid_step = kDefaultGridStep;
  bool overlays = false;
  std::size_t workers = 1;

  void validate() const {
    require_open_unit(beta, "beta");
    require_open_unit(alpha, "alpha");
    require_open_unit(tau, "tau");
    if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be positive");
    auto pow2 = [](std::size_t v) { return v > 0 && (v & (v - 1)) == 0; };
    if (!pow2(cross_resolution) || !pow2(self_resolution)) {
      throw ArgumentError("attention resolutions must be powers of two");
    }
    if (self_resolution < cross_resolution) {
      throw ArgumentError("self-attention resolution must be >= cross-attention resolution");
    }
    threshold_grid(grid_step);
    if (workers == 0) throw ArgumentError("workers must be at least 1");
  }
};

// Everything that affects outputs; the worker count is left out because it
// never changes results.
inline nlohmann::json config_to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["beta"] = c.beta;
  j["alpha"] = c.alpha;
  j["tau"] = c.tau;
  j["epsilon"] = c.epsilon;
  j["cross_resolution"] = c.cross_resolution;
  j["self_resolution"] = c.self_resolution;
  j["aggregator"] = to_string(c.aggregator);
  j["fusion_stage"] = to_string(c.fusion_stage);
  j["head_weighting"] = c.head_weighting == HeadWeighting::kSoftmax ? "softmax" : "pinned_head";
  j["normalize_cross"] = c.normalize_cross;
  j["lsp_enabled"] = c.lsp_enabled;
  j["smr_enabled"] = c.smr_enabled;
  j["grid_step"] = c.grid_step;
  j["overlays"] = c.overlays;
  return j;
}

inline ScoreMap aggregate_words(std::span<const ScoreMap> maps, const PhraseSpec& phrase,
                                const PipelineConfig& config) {
  switch (config.aggregator) {
    case Aggregator::kSubjectFocused:
      return fuse_word_maps(maps, head_similarity_weights(phrase, config.head_weighting));
    case Aggregator::kAverage:
      return fuse_word_maps(maps, uniform_weights(maps.size()));
    case Aggregator::kMultiplication:
      return fuse_product(maps);
  }
  throw ArgumentError("unknown aggregator");
}

// Predicted mask for one phrase at image resolution, before refinement.
inline BinaryMask predict_phrase(const PhraseSpec& phrase, const SampleData& data,
                                 Resolution image_size, const PipelineConfig& config) {
  std::vector<ScoreMap> words;
  words.reserve(phrase.word_token_ids.size());
  for (std::size_t t : phrase.word_token_ids) words.push_back(data.cross_maps.at(t));

  auto prepare = [&](const ScoreMap& m) {
    return config.normalize_cross ? min_max_normalize(m) : m;
  };

  if (!config.lsp_enabled) {
    const ScoreMap fused = prepare(aggregate_words(words, phrase, config));
    return segment(fused, image_size, config.alpha);
  }
  if (config.fusion_stage == FusionStage::kCross) {
    const ScoreMap fused = prepare(aggregate_words(words, phrase, config));
    return segment(enhance(fused, data.self_attention, config.beta), image_size,
                   config.alpha);
  }
  std::vector<ScoreMap> enhanced;
  enhanced.reserve(words.size());
  for (const auto& w : words) {
    enhanced.push_back(enhance(prepare(w), data.self_attention, config.beta));
  }
  return segment(aggregate_words(enhanced, phrase, config), image_size, config.alpha);
}

struct SampleResult {
  std::string sample_id;
  std::vector<EvalRecord> records;
  std::vector<BinaryMask> masks;  // aligned with records
};

inline void check_resolutions(const SampleData& data, const PipelineConfig& config) {
  const Resolution cross{config.cross_resolution, config.cross_resolution};
  const Resolution self{config.self_resolution, config.self_resolution};
  for (std::size_t i = 0; i < data.cross_maps.size(); ++i) {
    if (data.cross_maps[i].resolution() != cross) {
      throw ShapeError("cross-attention map " + std::to_string(i) + " is " +
                       to_string(data.cross_maps[i].resolution()) + ", expected " +
                       to_string(cross));
    }
  }
  if (data.self_attention.resolution() != self) {
    throw ShapeError("self-attention is " + to_string(data.self_attention.resolution()) +
                     ", expected " + to_string(self));
  }
}

inline SampleResult process_sample(const SampleManifest& manifest, const SampleData& data,
                                   const PipelineConfig& config) {
  check_resolutions(data, config);
  SampleResult out;
  out.sample_id = manifest.sample_id;
  for (const auto& phrase : manifest.phrases) {
    BinaryMask mask = predict_phrase(phrase, data, manifest.image_size, config);
    if (config.smr_enabled) mask = refine_mask(mask, data.pool, config.tau, config.epsilon);
    const BinaryMask& gt = data.gt_masks.at(phrase.phrase_id);
    out.records.push_back(
        {manifest.sample_id, phrase.phrase_id, iou(mask, gt), phrase.is_plural, phrase.is_thing});
    out.masks.push_back(std::move(mask));
  }
  return out;
}

// File-name-safe form of an id.
inline std::string sanitize_id(const std::string& id) {
  std::string s = id;
  for (char& c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return s;
}

struct SampleFailure {
  std::string manifest;
  std::string error;
};

struct RunResult {
  std::vector<EvalRecord> records;
  std::vector<SampleFailure> failures;
  std::optional<EvalReport> report;
  std::size_t samples_ok = 0;

  int exit_code() const { return failures.empty() ? 0 : 2; }
};

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << text;
  if (!out) throw IoError(path.string(), "write failed");
}

inline void write_sample_outputs(const SampleManifest& manifest, const SampleResult& result,
                                 const PipelineConfig& config,
                                 const std::filesystem::path& out_dir) {
  const std::string sample_dir = sanitize_id(manifest.sample_id);
  const auto mask_dir = out_dir / "masks" / sample_dir;
  std::filesystem::create_directories(mask_dir);
  std::optional<cv::Mat> image;
  std::filesystem::path overlay_dir;
  if (config.overlays) {
    overlay_dir = out_dir / "overlays" / sample_dir;
    std::filesystem::create_directories(overlay_dir);
    image = load_image(manifest.image_path);
  }
  for (std::size_t i = 0; i < manifest.phrases.size(); ++i) {
    const auto& phrase = manifest.phrases[i];
    const std::string name = std::to_string(i) + "_" + sanitize_id(phrase.phrase_id) + ".png";
    write_mask_png(result.masks[i], mask_dir / name);
    if (image) {
      write_image(render_overlay(*image, result.masks[i], phrase.phrase_id, phrase.text),
                  overlay_dir / name);
    }
  }
}

}  // namespace detail

// Runs every sample listed by `manifest_path` and writes config.json,
// report.json, report.txt, masks/ and (optionally) overlays/ under `out_dir`.
// Failing samples are recorded and skipped. Outputs do not depend on the
// worker count.
inline RunResult run_pipeline(const std::filesystem::path& manifest_path,
                              const PipelineConfig& config,
                              const std::filesystem::path& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  const auto sample_paths = list_samples(manifest_path);

  struct Slot {
    std::filesystem::path path;
    std::optional<SampleManifest> manifest;
    std::optional<SampleResult> result;
    std::string error;
  };
  std::vector<Slot> slots(sample_paths.size());
  for (std::size_t i = 0; i < sample_paths.size(); ++i) {
    slots[i].path = sample_paths[i];
    try {
      slots[i].manifest = load_manifest(sample_paths[i]);
    } catch (const std::exception& e) {
      slots[i].error = e.what();
    }
  }
  // Samples run in sample_id order; a repeated id fails every later copy.
  std::vector<std::size_t> order(slots.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key = [&](std::size_t i) {
    return std::make_pair(slots[i].manifest ? slots[i].manifest->sample_id : std::string(),
                          slots[i].path.string());
  };
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return key(a) < key(b); });
  for (std::size_t k = 1; k < order.size(); ++k) {
    auto& prev = slots[order[k - 1]];
    auto& cur = slots[order[k]];
    if (prev.manifest && cur.manifest && prev.manifest->sample_id == cur.manifest->sample_id) {
      cur.error = "duplicate sample_id " + cur.manifest->sample_id;
      cur.manifest.reset();
    }
  }

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < order.size(); k = next++) {
      Slot& slot = slots[order[k]];
      if (!slot.manifest) continue;
      try {
        const SampleData data = load_sample_data(*slot.manifest);
        SampleResult r = process_sample(*slot.manifest, data, config);
        detail::write_sample_outputs(*slot.manifest, r, config, out_dir);
        slot.result = std::move(r);
        spdlog::debug("sample {}: {} phrases", slot.manifest->sample_id,
                      slot.manifest->phrases.size());
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
    }
  };
  {
    const std::size_t n = std::min(config.workers, std::max<std::size_t>(order.size(), 1));
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < n; ++w) pool.emplace_back(work);
    work();
  }

  RunResult run;
  for (std::size_t idx : order) {
    const Slot& slot = slots[idx];
    if (slot.result) {
      ++run.samples_ok;
      run.records.insert(run.records.end(), slot.result->records.begin(),
                         slot.result->records.end());
    } else {
      spdlog::warn("sample {} failed: {}", slot.path.string(), slot.error);
      run.failures.push_back({slot.path.string(), slot.error});
    }
  }
  if (!run.records.empty()) run.report = build_report(run.records, config.grid_step);

  nlohmann::json report_json;
  report_json["summary"] = run.report ? report_to_json(*run.report) : nlohmann::json(nullptr);
  report_json["samples_ok"] = run.samples_ok;
  report_json["records"] = nlohmann::json::array();
  for (const auto& r : run.records) {
    report_json["records"].push_back({{"sample_id", r.sample_id},
                                      {"phrase_id", r.phrase_id},
                                      {"iou", r.iou},
                                      {"is_plural", r.is_plural},
                                      {"is_thing", r.is_thing}});
  }
  report_json["failures"] = nlohmann::json::array();
  for (const auto& f : run.failures) {
    report_json["failures"].push_back({{"manifest", f.manifest}, {"error", f.error}});
  }
  detail::write_text(out_dir / "config.json", config_to_json(config).dump(2) + "\n");
  detail::write_text(out_dir / "report.json", report_json.dump(2) + "\n");
  std::string text = run.report ? report_to_text(*run.report) : "no evaluated phrases\n";
  if (!run.failures.empty()) {
    text += std::to_string(run.failures.size()) + " sample(s) failed\n";
  }
  detail::write_text(out_dir / "report.txt", text);
  return run;
}

}  // namespace attnseg

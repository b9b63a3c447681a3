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

// Sample manifests. Relative paths are resolved against the directory that
// holds the manifest file. See docs/manifest.md for the schema.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnseg/error.hpp"
#include "attnseg/mask_io.hpp"
#include "attnseg/tensor_file.hpp"
#include "attnseg/types.hpp"

namespace attnseg {

inline constexpr Resolution kDefaultImageSize{512, 512};

struct PhraseSpec {
  std::string phrase_id;
  // Display text; defaults to phrase_id.
  std::string text;
  // Indices into SampleManifest::cross_attention_paths, one per word.
  std::vector<std::size_t> word_token_ids;
  // Position of the head noun inside word_token_ids; always the last word.
  std::size_t head_index = 0;
  std::vector<std::vector<float>> word_embeddings;
  bool is_plural = false;
  bool is_thing = false;
};

struct SampleManifest {
  std::filesystem::path manifest_path;
  std::string sample_id;
  std::filesystem::path image_path;
  Resolution image_size = kDefaultImageSize;
  std::vector<PhraseSpec> phrases;
  std::vector<std::filesystem::path> cross_attention_paths;
  std::filesystem::path self_attention_path;
  std::filesystem::path candidate_pool_path;
  // Candidate PNG files in load order (lexicographic by file name).
  std::vector<std::filesystem::path> candidate_files;
  // Keyed by phrase_id.
  std::map<std::string, std::filesystem::path> gt_mask_paths;

  std::size_t phrase_count() const noexcept { return phrases.size(); }
  std::size_t candidate_count() const noexcept { return candidate_files.size(); }
};

struct CandidateMaskPool {
  std::vector<BinaryMask> masks;

  std::size_t count() const noexcept { return masks.size(); }
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const std::string& field) {
  auto it = obj.find(field);
  if (it == obj.end()) throw ValidationError(field, "missing field");
  return *it;
}

inline std::string require_string(const json& obj, const std::string& field) {
  const json& v = require(obj, field);
  if (!v.is_string()) throw ValidationError(field, "expected a string");
  return v.get<std::string>();
}

inline bool require_bool(const json& obj, const std::string& field) {
  const json& v = require(obj, field);
  if (!v.is_boolean()) throw ValidationError(field, "expected a boolean");
  return v.get<bool>();
}

inline std::filesystem::path resolve_existing(const std::filesystem::path& base,
                                              const std::string& rel,
                                              const std::string& field) {
  std::filesystem::path p(rel);
  if (p.is_relative()) p = base / p;
  if (!std::filesystem::exists(p)) {
    throw ValidationError(field, "path does not exist: " + p.string());
  }
  return p;
}

inline PhraseSpec parse_phrase(const json& j, std::size_t token_maps,
                               const std::string& where) {
  if (!j.is_object()) throw ValidationError(where, "phrase must be an object");
  PhraseSpec p;
  p.phrase_id = require_string(j, "phrase_id");
  const std::string prefix = where + "(" + p.phrase_id + ").";
  if (p.phrase_id.empty()) throw ValidationError(where + ".phrase_id", "must be nonempty");
  p.text = p.phrase_id;
  if (auto it = j.find("text"); it != j.end()) {
    if (!it->is_string()) throw ValidationError(prefix + "text", "expected a string");
    p.text = it->get<std::string>();
  }

  const json& ids = require(j, "word_token_ids");
  if (!ids.is_array() || ids.empty()) {
    throw ValidationError(prefix + "word_token_ids", "must be a nonempty array");
  }
  for (const auto& id : ids) {
    if (!id.is_number_integer() || id.get<long long>() < 0) {
      throw ValidationError(prefix + "word_token_ids", "entries must be non-negative integers");
    }
    const auto idx = id.get<std::size_t>();
    if (idx >= token_maps) {
      throw ValidationError(prefix + "word_token_ids",
                            "token " + std::to_string(idx) +
                                " has no cross-attention map (" +
                                std::to_string(token_maps) + " available)");
    }
    p.word_token_ids.push_back(idx);
  }

  const std::size_t last = p.word_token_ids.size() - 1;
  p.head_index = last;
  if (auto it = j.find("head_index"); it != j.end()) {
    if (!it->is_number_integer() || it->get<long long>() != static_cast<long long>(last)) {
      throw ValidationError(prefix + "head_index",
                            "head noun must be the last word (index " +
                                std::to_string(last) + ")");
    }
  }

  const json& emb = require(j, "word_embeddings");
  if (!emb.is_array() || emb.size() != p.word_token_ids.size()) {
    throw ValidationError(prefix + "word_embeddings",
                          "need one embedding per word");
  }
  for (const auto& v : emb) {
    if (!v.is_array() || v.empty()) {
      throw ValidationError(prefix + "word_embeddings", "embeddings must be nonempty arrays");
    }
    std::vector<float> vec;
    vec.reserve(v.size());
    for (const auto& x : v) {
      if (!x.is_number() || !std::isfinite(x.get<double>())) {
        throw ValidationError(prefix + "word_embeddings", "entries must be finite numbers");
      }
      vec.push_back(x.get<float>());
    }
    if (!p.word_embeddings.empty() && vec.size() != p.word_embeddings.front().size()) {
      throw ValidationError(prefix + "word_embeddings", "embeddings differ in dimension");
    }
    p.word_embeddings.push_back(std::move(vec));
  }

  p.is_plural = require_bool(j, "is_plural");
  p.is_thing = require_bool(j, "is_thing");
  return p;
}

}  // namespace detail

// Parses and validates a manifest. Every referenced file must exist; tensor
// contents are not read here (see load_sample_data).
inline SampleManifest parse_manifest(const nlohmann::json& j,
                                     const std::filesystem::path& manifest_path) {
  using detail::json;
  if (!j.is_object()) throw ValidationError("<root>", "manifest must be a JSON object");
  const auto base = manifest_path.parent_path();

  SampleManifest m;
  m.manifest_path = manifest_path;
  m.sample_id = detail::require_string(j, "sample_id");
  if (m.sample_id.empty()) throw ValidationError("sample_id", "must be nonempty");
  m.image_path = detail::resolve_existing(base, detail::require_string(j, "image_path"),
                                          "image_path");

  if (auto it = j.find("image_size"); it != j.end()) {
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_integer() ||
        !(*it)[1].is_number_integer() || (*it)[0].get<long long>() <= 0 ||
        (*it)[1].get<long long>() <= 0) {
      throw ValidationError("image_size", "expected [H, W] with positive integers");
    }
    m.image_size = {(*it)[0].get<std::size_t>(), (*it)[1].get<std::size_t>()};
  }

  const json& cross = detail::require(j, "cross_attention_paths");
  if (!cross.is_array()) throw ValidationError("cross_attention_paths", "expected an array");
  for (std::size_t i = 0; i < cross.size(); ++i) {
    const std::string field = "cross_attention_paths[" + std::to_string(i) + "]";
    if (!cross[i].is_string()) throw ValidationError(field, "expected a string");
    m.cross_attention_paths.push_back(
        detail::resolve_existing(base, cross[i].get<std::string>(), field));
  }

  m.self_attention_path = detail::resolve_existing(
      base, detail::require_string(j, "self_attention_path"), "self_attention_path");

  m.candidate_pool_path = detail::resolve_existing(
      base, detail::require_string(j, "candidate_pool_path"), "candidate_pool_path");
  if (!std::filesystem::is_directory(m.candidate_pool_path)) {
    throw ValidationError("candidate_pool_path", "must be a directory of mask PNGs");
  }
  for (const auto& entry : std::filesystem::directory_iterator(m.candidate_pool_path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      m.candidate_files.push_back(entry.path());
    }
  }
  std::sort(m.candidate_files.begin(), m.candidate_files.end(),
            [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
  if (auto it = j.find("candidate_count"); it != j.end()) {
    if (!it->is_number_integer() ||
        it->get<long long>() != static_cast<long long>(m.candidate_files.size())) {
      throw ValidationError("candidate_count",
                            "does not match the " + std::to_string(m.candidate_files.size()) +
                                " mask files in the pool directory");
    }
  }

  const json& phrases = detail::require(j, "phrases");
  if (!phrases.is_array()) throw ValidationError("phrases", "expected an array");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    auto p = detail::parse_phrase(phrases[i], m.cross_attention_paths.size(),
                                  "phrases[" + std::to_string(i) + "]");
    if (!seen.insert(p.phrase_id).second) {
      throw ValidationError("phrases", "duplicate phrase_id " + p.phrase_id);
    }
    m.phrases.push_back(std::move(p));
  }

  const json& gt = detail::require(j, "gt_mask_paths");
  if (!gt.is_object()) {
    throw ValidationError("gt_mask_paths", "expected an object keyed by phrase_id");
  }
  if (gt.size() != m.phrases.size()) {
    throw ValidationError("gt_mask_paths",
                          std::to_string(gt.size()) + " entries for " +
                              std::to_string(m.phrases.size()) + " phrases");
  }
  for (const auto& p : m.phrases) {
    const std::string field = "gt_mask_paths." + p.phrase_id;
    auto it = gt.find(p.phrase_id);
    if (it == gt.end()) throw ValidationError(field, "missing ground-truth mask");
    if (!it->is_string()) throw ValidationError(field, "expected a string");
    m.gt_mask_paths[p.phrase_id] =
        detail::resolve_existing(base, it->get<std::string>(), field);
  }
  return m;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

inline SampleManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_json_file(path), path);
}

// A manifest path may name a single sample or a batch index of the form
// {"samples": ["a/manifest.json", ...]}. Returns the sample manifest paths.
inline std::vector<std::filesystem::path> list_samples(const std::filesystem::path& path) {
  const auto j = read_json_file(path);
  if (!j.is_object() || !j.contains("samples")) return {path};
  const auto& samples = j.at("samples");
  if (!samples.is_array()) throw ValidationError("samples", "expected an array");
  std::vector<std::filesystem::path> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i].is_string()) {
      throw ValidationError("samples[" + std::to_string(i) + "]", "expected a string");
    }
    std::filesystem::path p(samples[i].get<std::string>());
    if (p.is_relative()) p = path.parent_path() / p;
    out.push_back(p);
  }
  return out;
}

// Tensors and masks referenced by a manifest, fully decoded.
struct SampleData {
  std::vector<ScoreMap> cross_maps;
  SelfAttentionMatrix self_attention;
  CandidateMaskPool pool;
  std::map<std::string, BinaryMask> gt_masks;
};

inline SampleData load_sample_data(const SampleManifest& m) {
  SampleData d;
  for (const auto& p : m.cross_attention_paths) d.cross_maps.push_back(read_score_map(p));
  for (std::size_t i = 1; i < d.cross_maps.size(); ++i) {
    if (d.cross_maps[i].resolution() != d.cross_maps[0].resolution()) {
      throw ShapeError("cross_attention_paths[" + std::to_string(i) +
                       "]: resolution differs from token 0");
    }
  }
  d.self_attention = read_self_attention(m.self_attention_path);
  for (const auto& f : m.candidate_files) {
    auto mask = read_mask_png(f);
    if (mask.resolution() != m.image_size) {
      throw ShapeError(f.string() + ": candidate is " + to_string(mask.resolution()) +
                       ", image is " + to_string(m.image_size));
    }
    d.pool.masks.push_back(std::move(mask));
  }
  for (const auto& [id, path] : m.gt_mask_paths) {
    auto mask = read_mask_png(path);
    if (mask.resolution() != m.image_size) {
      throw ShapeError(path.string() + ": ground truth is " +
                       to_string(mask.resolution()) + ", image is " +
                       to_string(m.image_size));
    }
    d.gt_masks.emplace(id, std::move(mask));
  }
  return d;
}

}  // namespace attnseg

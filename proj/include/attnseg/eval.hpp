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

// Phrase grounding metric: per-phrase IoU, recall as a function of the IoU
// threshold, and Average Recall as the trapezoidal area under that curve.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnseg/error.hpp"
#include "attnseg/types.hpp"

namespace attnseg {

inline constexpr double kDefaultGridStep = 0.01;

struct EvalRecord {
  std::string sample_id;
  std::string phrase_id;
  double iou = 0.0;
  bool is_plural = false;
  bool is_thing = false;
};

struct CurvePoint {
  double threshold = 0.0;
  double recall = 0.0;
};

enum class Split { kOverall, kSingular, kPlural, kThing, kStuff };

inline constexpr std::array<Split, 5> kReportSplits = {
    Split::kOverall, Split::kSingular, Split::kPlural, Split::kThing, Split::kStuff};

inline const char* split_name(Split s) {
  switch (s) {
    case Split::kOverall: return "Overall";
    case Split::kSingular: return "Singular";
    case Split::kPlural: return "Plural";
    case Split::kThing: return "Thing";
    case Split::kStuff: return "Stuff";
  }
  return "?";
}

inline bool in_split(const EvalRecord& r, Split s) {
  switch (s) {
    case Split::kOverall: return true;
    case Split::kSingular: return !r.is_plural;
    case Split::kPlural: return r.is_plural;
    case Split::kThing: return r.is_thing;
    case Split::kStuff: return !r.is_thing;
  }
  return false;
}

struct SplitResult {
  Split split = Split::kOverall;
  std::size_t count = 0;
  // Absent when the split has no phrases.
  std::optional<double> average_recall;
};

struct EvalReport {
  double grid_step = kDefaultGridStep;
  std::size_t grid_points = 0;
  std::array<SplitResult, 5> splits;

  const SplitResult& at(Split s) const { return splits[static_cast<std::size_t>(s)]; }
  bool standard_grid() const { return std::abs(grid_step - kDefaultGridStep) < 1e-12; }
};

// Both masks empty counts as IoU 0.
inline double iou(const BinaryMask& a, const BinaryMask& b) {
  require_same_resolution(a, b, "iou");
  const std::size_t u = union_count(a, b);
  if (u == 0) return 0.0;
  return static_cast<double>(intersection_count(a, b)) / static_cast<double>(u);
}

// Thresholds i/n for i = 0..n with n = 1/step.
inline std::vector<double> threshold_grid(double step = kDefaultGridStep) {
  if (!(step > 0.0 && step <= 1.0)) {
    throw ArgumentError("grid step must lie in (0, 1], got " + std::to_string(step));
  }
  const double n_real = 1.0 / step;
  const auto n = static_cast<std::size_t>(std::llround(n_real));
  if (std::abs(n_real - static_cast<double>(n)) > 1e-6) {
    throw ArgumentError("grid step must divide 1 evenly, got " + std::to_string(step));
  }
  std::vector<double> grid(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    grid[i] = static_cast<double>(i) / static_cast<double>(n);
  }
  return grid;
}

// recall(t) = fraction of records with iou >= t.
inline std::vector<CurvePoint> recall_curve(std::span<const EvalRecord> records,
                                            std::span<const double> thresholds) {
  if (records.empty()) throw ArgumentError("recall_curve: no records");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (thresholds[i] < 0.0 || thresholds[i] > 1.0 ||
        (i > 0 && thresholds[i] < thresholds[i - 1])) {
      throw ArgumentError("recall_curve: thresholds must be sorted within [0, 1]");
    }
  }
  std::vector<CurvePoint> curve;
  curve.reserve(thresholds.size());
  for (double t : thresholds) {
    std::size_t hits = 0;
    for (const auto& r : records) hits += (r.iou >= t) ? 1 : 0;
    curve.push_back({t, static_cast<double>(hits) / static_cast<double>(records.size())});
  }
  return curve;
}

// Trapezoidal area under a curve spanning [0, 1], as a percentage.
inline double average_recall(std::span<const CurvePoint> curve) {
  if (curve.size() < 2) throw ArgumentError("average_recall: need at least two points");
  if (curve.front().threshold != 0.0 || curve.back().threshold != 1.0) {
    throw ArgumentError("average_recall: curve must span thresholds 0 to 1");
  }
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double dt = curve[i].threshold - curve[i - 1].threshold;
    if (dt < 0.0) throw ArgumentError("average_recall: thresholds not sorted");
    area += 0.5 * dt * (curve[i].recall + curve[i - 1].recall);
  }
  return 100.0 * area;
}

inline EvalReport build_report(std::span<const EvalRecord> records,
                               double grid_step = kDefaultGridStep) {
  if (records.empty()) throw ArgumentError("build_report: no records");
  const auto grid = threshold_grid(grid_step);
  EvalReport report;
  report.grid_step = grid_step;
  report.grid_points = grid.size();
  for (Split s : kReportSplits) {
    std::vector<EvalRecord> members;
    for (const auto& r : records) {
      if (in_split(r, s)) members.push_back(r);
    }
    auto& out = report.splits[static_cast<std::size_t>(s)];
    out.split = s;
    out.count = members.size();
    if (!members.empty()) out.average_recall = average_recall(recall_curve(members, grid));
  }
  return report;
}

inline nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["grid_step"] = report.grid_step;
  j["grid_points"] = report.grid_points;
  j["standard_grid"] = report.standard_grid();
  auto splits = nlohmann::json::array();
  for (const auto& s : report.splits) {
    nlohmann::json e;
    e["split"] = split_name(s.split);
    e["count"] = s.count;
    e["average_recall"] = s.average_recall ? nlohmann::json(*s.average_recall)
                                           : nlohmann::json(nullptr);
    splits.push_back(std::move(e));
  }
  j["splits"] = std::move(splits);
  return j;
}

// Plain-text table, one column per split.
inline std::string report_to_text(const EvalReport& report) {
  char buf[64];
  std::string out = "Average Recall (%)";
  std::snprintf(buf, sizeof buf, "  [IoU grid step %g", report.grid_step);
  out += buf;
  out += report.standard_grid() ? "]\n" : ", NON-STANDARD GRID]\n";

  out += "         ";
  for (const auto& s : report.splits) {
    std::snprintf(buf, sizeof buf, "%10s", split_name(s.split));
    out += buf;
  }
  out += "\nAR       ";
  for (const auto& s : report.splits) {
    if (s.average_recall) {
      std::snprintf(buf, sizeof buf, "%10.2f", *s.average_recall);
    } else {
      std::snprintf(buf, sizeof buf, "%10s", "-");
    }
    out += buf;
  }
  out += "\nphrases  ";
  for (const auto& s : report.splits) {
    std::snprintf(buf, sizeof buf, "%10zu", s.count);
    out += buf;
  }
  out += "\n";
  return out;
}

}  // namespace attnseg

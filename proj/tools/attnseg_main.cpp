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

// attnseg: ground every phrase of a manifest and score it.
//
// Exit status: 0 when every sample succeeds, 2 when some samples failed
// (they are listed in report.json), 1 on usage or setup errors.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "attnseg/pipeline.hpp"

int main(int argc, char** argv) {
  if (const char* level = std::getenv("ATTNSEG_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  } else {
    spdlog::set_level(spdlog::level::warn);
  }

  attnseg::PipelineConfig config;
  std::string manifest;
  std::string out_dir;
  std::string aggregator = attnseg::to_string(config.aggregator);
  std::string fusion_stage = attnseg::to_string(config.fusion_stage);
  std::string head_weighting = "softmax";
  bool no_smr = false;
  bool no_lsp = false;
  bool raw_cross = false;

  CLI::App app{"Zero-shot phrase grounding from diffusion attention maps"};
  app.add_option("--manifest", manifest, "Sample manifest or batch index (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Run directory for masks and reports")->required();
  app.add_option("--beta", config.beta, "Anchor threshold")->capture_default_str();
  app.add_option("--alpha", config.alpha, "Binarization threshold")->capture_default_str();
  app.add_option("--tau", config.tau, "Candidate match threshold")->capture_default_str();
  app.add_option("--epsilon", config.epsilon, "Match score smoothing")->capture_default_str();
  app.add_flag("--no-smr", no_smr, "Skip candidate-mask refinement");
  app.add_flag("--no-lsp", no_lsp, "Cross-attention-only baseline (implies no anchors)");
  app.add_option("--aggregator", aggregator, "Word aggregation")
      ->check(CLI::IsMember({"subject_focused", "average", "multiplication"}))
      ->capture_default_str();
  app.add_option("--fusion-stage", fusion_stage, "Fuse words before or after enhancement")
      ->check(CLI::IsMember({"cross", "enhanced"}))
      ->capture_default_str();
  app.add_option("--head-weighting", head_weighting, "Word weights: softmax or pinned_head")
      ->check(CLI::IsMember({"softmax", "pinned_head"}))
      ->capture_default_str();
  app.add_flag("--raw-cross", raw_cross, "Do not min-max normalize cross-attention");
  app.add_option("--cross-resolution", config.cross_resolution)->capture_default_str();
  app.add_option("--self-resolution", config.self_resolution)->capture_default_str();
  app.add_option("--workers", config.workers, "Samples processed concurrently")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--overlays", config.overlays, "Write overlay images");
  app.add_option("--grid-step", config.grid_step, "IoU threshold grid step")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    config.aggregator = attnseg::parse_aggregator(aggregator);
    config.fusion_stage = attnseg::parse_fusion_stage(fusion_stage);
    config.head_weighting = head_weighting == "pinned_head"
                                ? attnseg::HeadWeighting::kPinnedHead
                                : attnseg::HeadWeighting::kSoftmax;
    config.smr_enabled = !no_smr;
    config.lsp_enabled = !no_lsp;
    config.normalize_cross = !raw_cross;
    config.validate();

    const auto run = attnseg::run_pipeline(manifest, config, out_dir);
    if (run.report) {
      std::cout << attnseg::report_to_text(*run.report);
    } else {
      std::cout << "no evaluated phrases\n";
    }
    for (const auto& f : run.failures) {
      std::cerr << "failed: " << f.manifest << ": " << f.error << "\n";
    }
    return run.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

/*=========================================================================
*
*  Copyright The bmreg Authors
*
*  Licensed under the Apache License, Version 2.0 (the "License");
*  you may not use this file except in compliance with the License.
*  You may obtain a copy of the License at
*
*         http://www.apache.org/licenses/LICENSE-2.0.txt
*
*  Unless required by applicable law or agreed to in writing, software
*  distributed under the License is distributed on an "AS IS" BASIS,
*  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
*  See the License for the specific language governing permissions and
*  limitations under the License.
*
*=========================================================================*/
#pragma once

// End-to-end batch pipeline: affine stage, masked deformable stage, warping
// and the per-phase report, with all file I/O.

#include <optional>
#include <string>
#include <vector>

#include "affine_pipeline.hpp"
#include "deformable.hpp"
#include "evaluation.hpp"
#include "field.hpp"
#include "ssc.hpp"

namespace bmreg {

enum class Direction {
  Forward,  // moving is resampled into the fixed image space
  Reverse,  // fixed and moving swap roles
};

struct PipelineConfig {
  std::string fixed_path;
  std::string moving_path;
  std::string mask_path;              // optional ROI, usually the ultrasound field of view
  std::string fixed_landmarks_path;   // optional, both or neither
  std::string moving_landmarks_path;
  std::string output_dir;

  AffineStageConfig affine;
  DeformableConfig deformable;
  SscParams ssc;
  bool grid_search = false;
  std::vector<double> candidates = default_grid_candidates();
  Direction direction = Direction::Forward;
  double background = 0.0;
  int crop_margin_voxels = 4;
  bool run_deformable = true;

  // Every problem found, empty when the config is usable.
  std::vector<std::string> problems() const;
};

struct PipelineResult {
  AffineTransform affine;
  AffineDiagnostics affine_diagnostics;
  DeformableDiagnostics deformable_diagnostics;
  std::optional<GridSearchResult> grid_search;
  std::vector<PhaseReport> phases;
  std::string report_json;
};

// Validates, runs and writes affine.txt, field.nii.gz, total_field.nii.gz,
// warped.nii.gz, diff_<phase>.nii.gz, report.json and, with grid search,
// gridsearch.csv into config.output_dir.
PipelineResult run_pipeline(const PipelineConfig& config);

std::string render_report_json(const PipelineResult& result);
std::string render_grid_search_csv(const GridSearchResult& result);
std::string render_affine_diagnostics_csv(const AffineDiagnostics& diagnostics);

}  // namespace bmreg

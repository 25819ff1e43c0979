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

// Landmark TRE, per-phase SSC-MSE reporting and the LTS proportion grid
// search.

#include <optional>
#include <string>
#include <vector>

#include "affine_pipeline.hpp"
#include "field.hpp"
#include "geometry.hpp"
#include "ssc.hpp"

namespace bmreg {

struct TreResult {
  double mean_mm = 0.0;
  std::vector<double> per_landmark_mm;
  std::vector<bool> affine_only;  // landmark fell outside the field grid
};

// Fixed landmark x maps to transform(x + field(x)); the field is sampled by
// trilinear interpolation at x.
TreResult compute_tre(const LandmarkSet& fixed, const LandmarkSet& moving, const AffineTransform& transform,
                      const DisplacementField* field = nullptr);

struct GridSearchEntry {
  double proportion = 0.0;
  bool ok = false;
  double ssc_mse = 0.0;
  std::string error;  // set when the registration failed
  AffineTransform transform;
};

struct GridSearchResult {
  double best_proportion = 0.0;
  double best_score = 0.0;
  std::vector<GridSearchEntry> table;  // candidate order
};

std::vector<double> default_grid_candidates();

// Registers once per candidate and scores fixed against the warped moving
// volume, within mask when given. Ties go to the smaller proportion.
GridSearchResult grid_search_proportion(const Volume& fixed, const Volume& moving, const AffineStageConfig& config,
                                        const std::vector<double>& candidates, const Mask* mask = nullptr,
                                        const SscParams& ssc = {});

enum class Phase { Original, Affine, Deformable };
const char* phase_name(Phase phase) noexcept;

struct PhaseReport {
  Phase phase = Phase::Original;
  double ssc_mse = 0.0;
  std::optional<TreResult> tre;
  Volume difference;  // fixed - warped moving
};

struct PhaseInputs {
  const Volume* fixed = nullptr;
  const Volume* moving = nullptr;
  AffineTransform affine;
  const DisplacementField* field = nullptr;  // deformable field on the fixed grid; omitted phase if null
  const Mask* mask = nullptr;                // SSC-MSE region, on the fixed grid
  const LandmarkSet* fixed_landmarks = nullptr;
  const LandmarkSet* moving_landmarks = nullptr;
  SscParams ssc;
  double background = 0.0;
};

std::vector<PhaseReport> run_phase_report(const PhaseInputs& inputs);

}  // namespace bmreg

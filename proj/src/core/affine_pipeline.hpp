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

// Hierarchical block-matching affine registration: per pyramid level, warp
// the moving image by the current estimate, match blocks, fit an incremental
// affine by LTS and compose it into the estimate.

#include <utility>
#include <vector>

#include "block_matching.hpp"
#include "geometry.hpp"
#include "lts.hpp"

namespace bmreg {

struct AffineLevel {
  double spacing_mm = 1.0;
  int outer_iterations = 5;
};

enum class AffineInitializer { CenterAlignment, Identity, Given };

struct AffineStageConfig {
  std::vector<AffineLevel> levels{{1.0, 5}, {0.5, 5}};
  BlockMatchParams block_match;
  LtsParams lts;
  AffineInitializer initializer = AffineInitializer::CenterAlignment;
  AffineTransform initial;  // used with AffineInitializer::Given
  double background = 0.0;

  void validate() const;
};

struct AffineIterationRecord {
  int level = 0;
  double spacing_mm = 0.0;
  int iteration = 0;
  std::size_t active_blocks = 0;
  std::size_t correspondences = 0;
  std::size_t inliers = 0;
  double trimmed_rms_mm = 0.0;      // final trimmed RMS of the LTS fit
  double initial_trimmed_rms_mm = 0.0;  // trimmed RMS of the first LTS fit
  double motion_mm = 0.0;           // max corner motion of the increment
  int lts_iterations = 0;
  bool lts_converged = false;
};

struct AffineDiagnostics {
  std::vector<AffineIterationRecord> iterations;
};

// Translation taking the fixed grid's world center onto the moving grid's.
AffineTransform initialize_center_alignment(const Volume& fixed, const Volume& moving);

std::pair<AffineTransform, AffineDiagnostics> register_affine(const Volume& fixed, const Volume& moving,
                                                              const AffineStageConfig& config);

// Clamp intensities to the [lower, upper] quantiles (e.g. 0.005, 0.995).
Volume clamp_to_percentiles(const Volume& volume, double lower, double upper);

}  // namespace bmreg

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

// Affine fitting from point correspondences: ordinary least squares and
// iterated least trimmed squares (concentration steps).

#include <span>
#include <utility>
#include <vector>

#include "block_matching.hpp"
#include "geometry.hpp"

namespace bmreg {

struct LtsParams {
  double inlier_proportion = 0.8;  // fraction of pairs kept by the trimming
  int max_iterations = 30;
  double convergence_tol = 1e-4;   // mm, max point motion between refits

  void validate() const;
};

struct LtsReport {
  int iterations_used = 0;
  double final_trimmed_rms_mm = 0.0;
  std::size_t inlier_count = 0;
  double condition_estimate = 0.0;
  bool converged = false;
  std::vector<double> trimmed_rms_trace;  // one entry per fit, non-increasing
  std::vector<std::size_t> inliers;       // indices into the input pairs
};

// Minimizes sum ||A p_fixed - p_moving||^2 over the 12 affine parameters.
// Needs >= 4 pairs with non-coplanar fixed points (ErrorKind::Rank).
AffineTransform fit_affine_least_squares(std::span<const Correspondence> pairs);

// Throws ErrorKind::Validation when ceil(inlier_proportion * N) < 4.
std::pair<AffineTransform, LtsReport> fit_affine_lts(const CorrespondenceSet& pairs, const LtsParams& params);

}  // namespace bmreg

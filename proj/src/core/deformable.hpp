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

// Masked dense deformable registration by coarse-to-fine gradient descent
// with Gaussian regularization of the accumulated field.

#include <utility>
#include <vector>

#include "field.hpp"
#include "geometry.hpp"
#include "ssc.hpp"

namespace bmreg {

enum class DeformableSimilarity { LocalNcc, SscSsd };

struct DeformableConfig {
  double smoothness = 0.5;            // Gaussian sigma = 2 * smoothness voxels
  std::vector<double> levels{2.0, 1.0};  // isotropic spacings, coarse to fine
  int iterations_per_level = 50;
  double step_size = 0.5;             // mm, largest per-voxel update
  DeformableSimilarity similarity = DeformableSimilarity::SscSsd;
  SscParams ssc;
  int ncc_radius = 2;                 // local NCC window half-width in voxels

  void validate() const;
};

struct DeformableIterationRecord {
  int level = 0;
  double spacing_mm = 0.0;
  int iteration = 0;      // 0 is the objective before the first update
  double objective = 0.0; // lower is better
  double step_mm = 0.0;   // accepted step length, 0 for iteration 0
};

struct DeformableDiagnostics {
  std::vector<DeformableIterationRecord> iterations;
};

// fixed, moving and roi must share a grid. The returned field lives on that
// grid and is exactly zero outside roi.
std::pair<DisplacementField, DeformableDiagnostics> register_deformable(const Volume& fixed,
                                                                        const Volume& moving,
                                                                        const Mask& roi,
                                                                        const DeformableConfig& config);

}  // namespace bmreg

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

// Block partition, variance-based block selection and |NCC| block matching.

#include <span>
#include <vector>

#include "geometry.hpp"

namespace bmreg {

struct BlockMatchParams {
  int block_size = 4;
  double active_fraction = 0.25;
  int search_radius = 4;
  int search_stride = 1;

  void validate() const;
};

struct ActiveBlock {
  Index3 origin;          // voxel index of the block's first voxel
  double variance = 0.0;  // population variance of the block intensities
  bool zero_variance = false;
};

struct Correspondence {
  Vec3 fixed_point;   // world mm, fixed block center
  Vec3 moving_point;  // world mm, matched moving block center
  double score = 0.0; // |NCC| in [0, 1]
};

struct CorrespondenceSet {
  std::vector<Correspondence> pairs;
  double source_level_mm = 0.0;  // spacing of the level that produced the pairs
};

// Tiles non-overlapping blocks from the index origin (partial blocks are
// dropped) and returns the ceil(active_fraction * N) blocks with the highest
// variance, ties broken by the lower linear block index.
std::vector<ActiveBlock> partition_and_select(const Volume& fixed, const BlockMatchParams& params);

// Fixed and moving must share a grid; moving is the image already warped by
// the current transform estimate. For every non-degenerate active block the
// moving block with the highest |NCC| inside the search window wins; ties go
// to the smaller displacement, then the lexicographically smaller offset.
CorrespondenceSet match_blocks(const Volume& fixed, const Volume& moving,
                               std::span<const ActiveBlock> active, const BlockMatchParams& params);

}  // namespace bmreg

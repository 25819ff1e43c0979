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

#include <vector>

#include "geometry.hpp"

namespace bmreg {

// Dense displacement field on a fixed-image grid. Vectors are world-space
// millimeters: voxel v samples the moving image at world(v) + vectors[v].
class DisplacementField {
public:
  DisplacementField(Grid grid, std::vector<Vec3> vectors);
  static DisplacementField zero(const Grid& grid);

  const Grid& grid() const noexcept { return grid_; }
  const std::vector<Vec3>& vectors() const noexcept { return vectors_; }
  std::vector<Vec3>& vectors() noexcept { return vectors_; }
  const Vec3& at(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return vectors_[static_cast<std::size_t>(grid_.linear_index(i, j, k))];
  }

  bool is_identity() const;
  double max_magnitude() const;

private:
  Grid grid_;
  std::vector<Vec3> vectors_;
};

}  // namespace bmreg

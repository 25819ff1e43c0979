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
#include "field.hpp"

#include <algorithm>

namespace bmreg {

DisplacementField::DisplacementField(Grid grid, std::vector<Vec3> vectors)
    : grid_(std::move(grid)), vectors_(std::move(vectors)) {
  if (static_cast<std::int64_t>(vectors_.size()) != grid_.voxel_count())
    fail(ErrorKind::Validation, "displacement field length does not match grid voxel count");
  for (std::size_t n = 0; n < vectors_.size(); ++n) {
    if (!vectors_[n].allFinite())
      fail(ErrorKind::Numerical, "non-finite displacement at voxel " + std::to_string(n));
  }
}

DisplacementField DisplacementField::zero(const Grid& grid) {
  return DisplacementField(grid, std::vector<Vec3>(static_cast<std::size_t>(grid.voxel_count()),
                                                   Vec3::Zero()));
}

bool DisplacementField::is_identity() const {
  return std::all_of(vectors_.begin(), vectors_.end(),
                     [](const Vec3& v) { return v[0] == 0.0 && v[1] == 0.0 && v[2] == 0.0; });
}

double DisplacementField::max_magnitude() const {
  double m = 0.0;
  for (const auto& v : vectors_) m = std::max(m, v.norm());
  return m;
}

}  // namespace bmreg

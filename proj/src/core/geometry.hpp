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

// Core volume and geometry types.
//
// Conventions used throughout the library:
//  * world coordinates are millimeters, voxel coordinates are continuous
//    voxel indices;
//  * volumes are stored with the first axis fastest:
//    linear = i + dims[0] * (j + dims[1] * k);
//  * an AffineTransform maps fixed-space world points to moving-space world
//    points (the resampling direction).

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"

namespace bmreg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Index3 = std::array<std::int64_t, 3>;

class Grid {
public:
  // Throws ErrorKind::Geometry unless dims >= 1, the last row is exactly
  // (0,0,0,1) and the 3x3 part is invertible. Spacing is the column norms.
  Grid(const Index3& dims, const Mat4& voxel_to_world);

  static Grid from_spacing(const Index3& dims, const Vec3& spacing,
                           const Vec3& origin = Vec3::Zero());

  const Index3& dims() const noexcept { return dims_; }
  const Vec3& spacing() const noexcept { return spacing_; }
  const Mat4& voxel_to_world() const noexcept { return voxel_to_world_; }
  const Mat4& world_to_voxel() const noexcept { return world_to_voxel_; }
  Mat3 linear() const { return voxel_to_world_.topLeftCorner<3, 3>(); }

  std::int64_t voxel_count() const noexcept { return dims_[0] * dims_[1] * dims_[2]; }
  std::int64_t linear_index(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept {
    return i + dims_[0] * (j + dims_[1] * k);
  }
  Index3 index_of(std::int64_t linear) const noexcept {
    const std::int64_t i = linear % dims_[0];
    const std::int64_t rest = linear / dims_[0];
    return {i, rest % dims_[1], rest / dims_[1]};
  }

  Vec3 world_from_voxel(const Vec3& index) const;
  Vec3 voxel_from_world(const Vec3& point) const;

  // World position of the centroid of all voxel centers.
  Vec3 world_center() const;
  // World positions of the eight corner voxel centers.
  std::array<Vec3, 8> corner_points() const;

  bool matches(const Grid& other, double tol = 1e-6) const;

private:
  Index3 dims_;
  Vec3 spacing_;
  Mat4 voxel_to_world_;
  Mat4 world_to_voxel_;
};

Vec3 world_from_voxel(const Grid& grid, const Vec3& index);
Vec3 voxel_from_world(const Grid& grid, const Vec3& point);

class Volume {
public:
  // Throws on a size mismatch or on any non-finite value.
  Volume(Grid grid, std::vector<double> data);
  explicit Volume(Grid grid, double fill = 0.0);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  double at(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data_[static_cast<std::size_t>(grid_.linear_index(i, j, k))];
  }
  double& at(std::int64_t i, std::int64_t j, std::int64_t k) {
    return data_[static_cast<std::size_t>(grid_.linear_index(i, j, k))];
  }

private:
  Grid grid_;
  std::vector<double> data_;
};

class Mask {
public:
  Mask(Grid grid, std::vector<std::uint8_t> data);
  explicit Mask(Grid grid, bool fill = false);
  static Mask from_volume(const Volume& volume);  // nonzero -> true

  const Grid& grid() const noexcept { return grid_; }
  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }
  bool at(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data_[static_cast<std::size_t>(grid_.linear_index(i, j, k))] != 0;
  }
  std::int64_t count() const;

private:
  Grid grid_;
  std::vector<std::uint8_t> data_;
};

class AffineTransform {
public:
  AffineTransform();  // identity
  // Throws ErrorKind::Geometry unless the last row is exactly (0,0,0,1)
  // and |det| of the linear part exceeds 1e-12.
  explicit AffineTransform(const Mat4& matrix);

  static AffineTransform identity() { return AffineTransform(); }
  static AffineTransform translation(const Vec3& offset);

  const Mat4& matrix() const noexcept { return matrix_; }
  Mat3 linear() const { return matrix_.topLeftCorner<3, 3>(); }
  Vec3 offset() const { return matrix_.topRightCorner<3, 1>(); }

  Vec3 apply(const Vec3& point) const;
  AffineTransform inverse() const;

private:
  Mat4 matrix_;
};

// Result applies b first, then a.
AffineTransform compose(const AffineTransform& a, const AffineTransform& b);

// Largest distance between a(p) and b(p) over the points.
double max_point_distance(const AffineTransform& a, const AffineTransform& b,
                          std::span<const Vec3> points);

struct LandmarkSet {
  std::vector<Vec3> points;
  std::vector<std::string> labels;  // empty, or one per point

  std::size_t size() const noexcept { return points.size(); }
  void validate() const;
};

}  // namespace bmreg

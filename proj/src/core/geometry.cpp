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
#include "geometry.hpp"

#include <cmath>
#include <sstream>

namespace bmreg {

namespace {

bool exact_last_row(const Mat4& m) {
  return m(3, 0) == 0.0 && m(3, 1) == 0.0 && m(3, 2) == 0.0 && m(3, 3) == 1.0;
}

}  // namespace

Grid::Grid(const Index3& dims, const Mat4& voxel_to_world)
    : dims_(dims), voxel_to_world_(voxel_to_world) {
  for (int a = 0; a < 3; ++a) {
    if (dims_[a] < 1) {
      fail(ErrorKind::Geometry, "grid dimension " + std::to_string(a) + " must be >= 1, got " +
                                    std::to_string(dims_[a]));
    }
  }
  if (!voxel_to_world_.allFinite()) fail(ErrorKind::Geometry, "voxel_to_world has non-finite entries");
  if (!exact_last_row(voxel_to_world_))
    fail(ErrorKind::Geometry, "voxel_to_world last row must be (0,0,0,1)");
  const Mat3 lin = voxel_to_world_.topLeftCorner<3, 3>();
  const double det = lin.determinant();
  if (!(std::abs(det) > 0.0) || !std::isfinite(det))
    fail(ErrorKind::Geometry, "voxel_to_world is singular");
  for (int a = 0; a < 3; ++a) spacing_[a] = lin.col(a).norm();
  world_to_voxel_ = Mat4::Identity();
  const Mat3 inv = lin.inverse();
  world_to_voxel_.topLeftCorner<3, 3>() = inv;
  world_to_voxel_.topRightCorner<3, 1>() = -inv * voxel_to_world_.topRightCorner<3, 1>();
}

Grid Grid::from_spacing(const Index3& dims, const Vec3& spacing, const Vec3& origin) {
  for (int a = 0; a < 3; ++a) {
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
      fail(ErrorKind::Geometry, "grid spacing must be positive and finite");
  }
  Mat4 m = Mat4::Identity();
  m(0, 0) = spacing[0];
  m(1, 1) = spacing[1];
  m(2, 2) = spacing[2];
  m.topRightCorner<3, 1>() = origin;
  return Grid(dims, m);
}

Vec3 Grid::world_from_voxel(const Vec3& index) const {
  return voxel_to_world_.topLeftCorner<3, 3>() * index + voxel_to_world_.topRightCorner<3, 1>();
}

Vec3 Grid::voxel_from_world(const Vec3& point) const {
  return world_to_voxel_.topLeftCorner<3, 3>() * point + world_to_voxel_.topRightCorner<3, 1>();
}

Vec3 Grid::world_center() const {
  const Vec3 mid(0.5 * static_cast<double>(dims_[0] - 1), 0.5 * static_cast<double>(dims_[1] - 1),
                 0.5 * static_cast<double>(dims_[2] - 1));
  return world_from_voxel(mid);
}

std::array<Vec3, 8> Grid::corner_points() const {
  std::array<Vec3, 8> out;
  for (int c = 0; c < 8; ++c) {
    const Vec3 idx((c & 1) ? static_cast<double>(dims_[0] - 1) : 0.0,
                   (c & 2) ? static_cast<double>(dims_[1] - 1) : 0.0,
                   (c & 4) ? static_cast<double>(dims_[2] - 1) : 0.0);
    out[static_cast<std::size_t>(c)] = world_from_voxel(idx);
  }
  return out;
}

bool Grid::matches(const Grid& other, double tol) const {
  if (dims_ != other.dims_) return false;
  return (voxel_to_world_ - other.voxel_to_world_).cwiseAbs().maxCoeff() <= tol;
}

Vec3 world_from_voxel(const Grid& grid, const Vec3& index) { return grid.world_from_voxel(index); }
Vec3 voxel_from_world(const Grid& grid, const Vec3& point) { return grid.voxel_from_world(point); }

Volume::Volume(Grid grid, std::vector<double> data) : grid_(std::move(grid)), data_(std::move(data)) {
  if (static_cast<std::int64_t>(data_.size()) != grid_.voxel_count()) {
    fail(ErrorKind::Validation, "volume data length " + std::to_string(data_.size()) +
                                    " does not match grid voxel count " +
                                    std::to_string(grid_.voxel_count()));
  }
  for (std::size_t n = 0; n < data_.size(); ++n) {
    if (!std::isfinite(data_[n]))
      fail(ErrorKind::Numerical, "non-finite intensity at voxel " + std::to_string(n));
  }
}

Volume::Volume(Grid grid, double fill)
    : grid_(std::move(grid)), data_(static_cast<std::size_t>(grid_.voxel_count()), fill) {}

Mask::Mask(Grid grid, std::vector<std::uint8_t> data) : grid_(std::move(grid)), data_(std::move(data)) {
  if (static_cast<std::int64_t>(data_.size()) != grid_.voxel_count())
    fail(ErrorKind::Validation, "mask data length does not match grid voxel count");
  for (auto& v : data_) v = v ? 1 : 0;
}

Mask::Mask(Grid grid, bool fill)
    : grid_(std::move(grid)), data_(static_cast<std::size_t>(grid_.voxel_count()), fill ? 1 : 0) {}

Mask Mask::from_volume(const Volume& volume) {
  std::vector<std::uint8_t> bits(volume.data().size());
  for (std::size_t n = 0; n < bits.size(); ++n) bits[n] = volume.data()[n] != 0.0 ? 1 : 0;
  return Mask(volume.grid(), std::move(bits));
}

std::int64_t Mask::count() const {
  std::int64_t n = 0;
  for (auto v : data_) n += v;
  return n;
}

AffineTransform::AffineTransform() : matrix_(Mat4::Identity()) {}

AffineTransform::AffineTransform(const Mat4& matrix) : matrix_(matrix) {
  if (!matrix_.allFinite()) fail(ErrorKind::Geometry, "affine matrix has non-finite entries");
  if (!exact_last_row(matrix_)) fail(ErrorKind::Geometry, "affine matrix last row must be (0,0,0,1)");
  const double det = matrix_.topLeftCorner<3, 3>().determinant();
  if (!(std::abs(det) > 1e-12)) {
    std::ostringstream os;
    os << "affine matrix is singular (det = " << det << ")";
    fail(ErrorKind::Geometry, os.str());
  }
}

AffineTransform AffineTransform::translation(const Vec3& offset) {
  Mat4 m = Mat4::Identity();
  m.topRightCorner<3, 1>() = offset;
  return AffineTransform(m);
}

Vec3 AffineTransform::apply(const Vec3& point) const {
  return matrix_.topLeftCorner<3, 3>() * point + matrix_.topRightCorner<3, 1>();
}

AffineTransform AffineTransform::inverse() const {
  Mat4 inv = Mat4::Identity();
  const Mat3 lin = matrix_.topLeftCorner<3, 3>().inverse();
  inv.topLeftCorner<3, 3>() = lin;
  inv.topRightCorner<3, 1>() = -lin * matrix_.topRightCorner<3, 1>();
  return AffineTransform(inv);
}

AffineTransform compose(const AffineTransform& a, const AffineTransform& b) {
  Mat4 m = a.matrix() * b.matrix();
  m.row(3) << 0.0, 0.0, 0.0, 1.0;
  return AffineTransform(m);
}

double max_point_distance(const AffineTransform& a, const AffineTransform& b,
                          std::span<const Vec3> points) {
  double worst = 0.0;
  for (const auto& p : points) worst = std::max(worst, (a.apply(p) - b.apply(p)).norm());
  return worst;
}

void LandmarkSet::validate() const {
  if (!labels.empty() && labels.size() != points.size())
    fail(ErrorKind::Validation, "landmark labels must be empty or one per point");
  for (std::size_t n = 0; n < points.size(); ++n) {
    if (!points[n].allFinite())
      fail(ErrorKind::Validation, "landmark " + std::to_string(n) + " has non-finite coordinates");
  }
}

}  // namespace bmreg

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
#include "resample.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bmreg {

namespace {

constexpr double kFieldSlack = 1e-6;
constexpr double kSnap = 1e-9;

struct AxisWeights {
  std::int64_t i0 = 0;
  std::int64_t i1 = 0;
  double t = 0.0;
};

// Near-integer indices are snapped so that grid-aligned resampling
// reproduces voxel values exactly.
inline double snap(double x) {
  const double r = std::nearbyint(x);
  return std::abs(x - r) < kSnap ? r : x;
}

inline bool linear_axis(double x, std::int64_t d, bool clamp, AxisWeights& w) {
  x = snap(x);
  if (!(x == x)) return false;
  if (!clamp && (x < -kFieldSlack || x > static_cast<double>(d - 1) + kFieldSlack)) return false;
  x = std::clamp(x, 0.0, static_cast<double>(d - 1));
  if (d == 1) {
    w = {0, 0, 0.0};
    return true;
  }
  auto i0 = static_cast<std::int64_t>(std::floor(x));
  if (i0 >= d - 1) i0 = d - 2;
  w.i0 = i0;
  w.i1 = i0 + 1;
  w.t = x - static_cast<double>(i0);
  return true;
}

inline bool nearest_axis(double x, std::int64_t d, std::int64_t& out) {
  x = snap(x);
  if (!(x >= -0.5 && x < static_cast<double>(d) - 0.5)) return false;
  out = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(x + 0.5)), 0, d - 1);
  return true;
}

inline double lerp(double a, double b, double t) { return (1.0 - t) * a + t * b; }
inline Vec3 lerp(const Vec3& a, const Vec3& b, double t) { return (1.0 - t) * a + t * b; }

template <class Get>
inline auto trilinear(const Index3& dims, const AxisWeights& wx, const AxisWeights& wy,
                      const AxisWeights& wz, Get get) {
  const std::int64_t nx = dims[0];
  const std::int64_t nxy = dims[0] * dims[1];
  const std::int64_t y0 = nx * wy.i0, y1 = nx * wy.i1;
  const std::int64_t z0 = nxy * wz.i0, z1 = nxy * wz.i1;
  const auto c00 = lerp(get(wx.i0 + y0 + z0), get(wx.i1 + y0 + z0), wx.t);
  const auto c10 = lerp(get(wx.i0 + y1 + z0), get(wx.i1 + y1 + z0), wx.t);
  const auto c01 = lerp(get(wx.i0 + y0 + z1), get(wx.i1 + y0 + z1), wx.t);
  const auto c11 = lerp(get(wx.i0 + y1 + z1), get(wx.i1 + y1 + z1), wx.t);
  return lerp(lerp(c00, c10, wy.t), lerp(c01, c11, wy.t), wz.t);
}

double sample_linear(const Volume& v, const Vec3& idx, double background, bool clamp) {
  const Index3& d = v.grid().dims();
  AxisWeights wx, wy, wz;
  if (!linear_axis(idx[0], d[0], clamp, wx) || !linear_axis(idx[1], d[1], clamp, wy) ||
      !linear_axis(idx[2], d[2], clamp, wz))
    return background;
  const double* data = v.data().data();
  return trilinear(d, wx, wy, wz, [data](std::int64_t n) { return data[n]; });
}

enum class Edge { Background, Clamp };

// Resamples src onto target where target index x maps to source index
// index_map * x.
Volume resample_indexed(const Volume& src, const Mat4& index_map, const Grid& target,
                        Interpolation interp, double background, Edge edge) {
  Volume out(target, 0.0);
  const Index3& td = target.dims();
  auto* dst = out.data().data();
  const Mat3 lin = index_map.topLeftCorner<3, 3>();
  const Vec3 off = index_map.topRightCorner<3, 1>();
  parallel_for(td[1] * td[2], [&](std::int64_t r0, std::int64_t r1) {
    for (std::int64_t r = r0; r < r1; ++r) {
      const std::int64_t j = r % td[1];
      const std::int64_t k = r / td[1];
      for (std::int64_t i = 0; i < td[0]; ++i) {
        const Vec3 idx = lin * Vec3(static_cast<double>(i), static_cast<double>(j), static_cast<double>(k)) + off;
        const std::int64_t n = i + td[0] * r;
        if (interp == Interpolation::Trilinear) {
          dst[n] = sample_linear(src, idx, background, edge == Edge::Clamp);
        } else {
          dst[n] = sample_nearest(src, idx, background);
        }
      }
    }
  });
  return out;
}

std::vector<double> gaussian_kernel(double sigma, std::int64_t max_radius) {
  const auto radius = std::min<std::int64_t>(static_cast<std::int64_t>(std::ceil(3.0 * sigma)), max_radius);
  const auto full = static_cast<std::int64_t>(std::ceil(3.0 * sigma));
  // Normalize over the full support so truncation to the grid keeps weights
  // identical to the untruncated kernel.
  double total = 0.0;
  for (std::int64_t r = -full; r <= full; ++r)
    total += std::exp(-0.5 * static_cast<double>(r * r) / (sigma * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  for (std::int64_t r = -radius; r <= radius; ++r)
    k[static_cast<std::size_t>(r + radius)] = std::exp(-0.5 * static_cast<double>(r * r) / (sigma * sigma)) / total;
  return k;
}

void convolve_axis(std::vector<double>& data, const Index3& dims, int axis, double sigma, Boundary boundary) {
  if (!(sigma > 0.0)) return;
  const std::int64_t len = dims[static_cast<std::size_t>(axis)];
  // With zero padding, taps beyond the grid contribute nothing.
  const std::int64_t cap = boundary == Boundary::Zero ? len : std::int64_t{1} << 40;
  const std::vector<double> kernel = gaussian_kernel(sigma, cap);
  const std::int64_t radius = static_cast<std::int64_t>(kernel.size() / 2);
  const std::int64_t nx = dims[0], ny = dims[1], nz = dims[2];
  const std::int64_t stride = axis == 0 ? 1 : (axis == 1 ? nx : nx * ny);
  const std::int64_t lines = nx * ny * nz / len;
  parallel_for(lines, [&](std::int64_t l0, std::int64_t l1) {
    std::vector<double> line(static_cast<std::size_t>(len));
    for (std::int64_t l = l0; l < l1; ++l) {
      std::int64_t base;
      if (axis == 0) {
        base = l * nx;
      } else if (axis == 1) {
        base = (l % nx) + nx * ny * (l / nx);
      } else {
        base = l;
      }
      for (std::int64_t p = 0; p < len; ++p) line[static_cast<std::size_t>(p)] = data[static_cast<std::size_t>(base + p * stride)];
      for (std::int64_t p = 0; p < len; ++p) {
        double acc = 0.0;
        for (std::int64_t r = -radius; r <= radius; ++r) {
          std::int64_t q = p + r;
          if (q < 0 || q >= len) {
            if (boundary == Boundary::Zero) continue;
            q = std::clamp<std::int64_t>(q, 0, len - 1);
          }
          acc += kernel[static_cast<std::size_t>(r + radius)] * line[static_cast<std::size_t>(q)];
        }
        data[static_cast<std::size_t>(base + p * stride)] = acc;
      }
    }
  });
}

void smooth_array(std::vector<double>& data, const Index3& dims, const Vec3& sigma, Boundary boundary) {
  for (int a = 0; a < 3; ++a) convolve_axis(data, dims, a, sigma[a], boundary);
}

}  // namespace

double sample_trilinear(const Volume& volume, const Vec3& index, double background) {
  return sample_linear(volume, index, background, false);
}

double sample_trilinear_clamped(const Volume& volume, const Vec3& index) {
  return sample_linear(volume, index, 0.0, true);
}

double sample_nearest(const Volume& volume, const Vec3& index, double background) {
  const Index3& d = volume.grid().dims();
  std::int64_t i, j, k;
  if (!nearest_axis(index[0], d[0], i) || !nearest_axis(index[1], d[1], j) || !nearest_axis(index[2], d[2], k))
    return background;
  return volume.at(i, j, k);
}

Volume gaussian_smooth(const Volume& volume, const Vec3& sigma_voxels, Boundary boundary) {
  std::vector<double> data(volume.data().begin(), volume.data().end());
  smooth_array(data, volume.grid().dims(), sigma_voxels, boundary);
  return Volume(volume.grid(), std::move(data));
}

DisplacementField gaussian_smooth(const DisplacementField& field, double sigma_voxels) {
  if (!(sigma_voxels > 0.0)) return field;
  const auto n = field.vectors().size();
  DisplacementField out = field;
  std::vector<double> comp(n);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t v = 0; v < n; ++v) comp[v] = field.vectors()[v][c];
    smooth_array(comp, field.grid().dims(), Vec3::Constant(sigma_voxels), Boundary::Zero);
    for (std::size_t v = 0; v < n; ++v) out.vectors()[v][c] = comp[v];
  }
  return out;
}

Grid isotropic_grid(const Grid& grid, double iso_spacing_mm) {
  if (!(iso_spacing_mm > 0.0) || !std::isfinite(iso_spacing_mm))
    fail(ErrorKind::Validation, "resampling spacing must be positive");
  Index3 dims{};
  Vec3 first;
  Mat4 m = Mat4::Identity();
  for (int a = 0; a < 3; ++a) {
    const double spacing = grid.spacing()[a];
    const double extent = static_cast<double>(grid.dims()[static_cast<std::size_t>(a)]) * spacing;
    const auto n = static_cast<std::int64_t>(std::floor(extent / iso_spacing_mm + 1e-9));
    if (n < 1) {
      fail(ErrorKind::Geometry, "resampling to " + std::to_string(iso_spacing_mm) +
                                    " mm leaves zero voxels along axis " + std::to_string(a));
    }
    dims[static_cast<std::size_t>(a)] = n;
    const double ratio = iso_spacing_mm / spacing;
    const double leftover = extent - static_cast<double>(n) * iso_spacing_mm;
    first[a] = -0.5 + (0.5 * leftover + 0.5 * iso_spacing_mm) / spacing;
    m.block<3, 1>(0, a) = grid.voxel_to_world().block<3, 1>(0, a) * ratio;
  }
  m.topRightCorner<3, 1>() = grid.world_from_voxel(first);
  return Grid(dims, m);
}

Volume resample_to_resolution(const Volume& volume, double iso_spacing_mm) {
  const Grid target = isotropic_grid(volume.grid(), iso_spacing_mm);
  Vec3 sigma = Vec3::Zero();
  bool smooth = false;
  for (int a = 0; a < 3; ++a) {
    const double ratio = iso_spacing_mm / volume.grid().spacing()[a];
    if (ratio > 1.0) {
      sigma[a] = 0.42 * ratio;
      smooth = true;
    }
  }
  const Mat4 index_map = volume.grid().world_to_voxel() * target.voxel_to_world();
  if (!smooth) return resample_indexed(volume, index_map, target, Interpolation::Trilinear, 0.0, Edge::Clamp);
  const Volume smoothed = gaussian_smooth(volume, sigma, Boundary::Clamp);
  return resample_indexed(smoothed, index_map, target, Interpolation::Trilinear, 0.0, Edge::Clamp);
}

Volume apply_affine(const Volume& moving, const AffineTransform& transform, const Grid& target,
                    Interpolation interp, double background) {
  const Mat4 index_map = moving.grid().world_to_voxel() * transform.matrix() * target.voxel_to_world();
  return resample_indexed(moving, index_map, target, interp, background, Edge::Background);
}

Mask apply_affine(const Mask& moving, const AffineTransform& transform, const Grid& target) {
  std::vector<double> values(moving.data().begin(), moving.data().end());
  const Volume as_volume(moving.grid(), std::move(values));
  return Mask::from_volume(apply_affine(as_volume, transform, target, Interpolation::Nearest, 0.0));
}

Volume apply_field(const Volume& moving, const DisplacementField& field, Interpolation interp,
                   double background) {
  const Grid& target = field.grid();
  Volume out(target, 0.0);
  const Index3& td = target.dims();
  auto* dst = out.data().data();
  parallel_for(td[1] * td[2], [&](std::int64_t r0, std::int64_t r1) {
    for (std::int64_t r = r0; r < r1; ++r) {
      const std::int64_t j = r % td[1];
      const std::int64_t k = r / td[1];
      for (std::int64_t i = 0; i < td[0]; ++i) {
        const std::int64_t n = i + td[0] * r;
        const Vec3 world = target.world_from_voxel(Vec3(static_cast<double>(i), static_cast<double>(j),
                                                        static_cast<double>(k))) +
                           field.vectors()[static_cast<std::size_t>(n)];
        const Vec3 idx = moving.grid().voxel_from_world(world);
        dst[n] = interp == Interpolation::Trilinear ? sample_trilinear(moving, idx, background)
                                                    : sample_nearest(moving, idx, background);
      }
    }
  });
  return out;
}

DisplacementField compose_affine_then_field(const AffineTransform& a, const DisplacementField& field) {
  DisplacementField out = field;
  const Grid& g = field.grid();
  parallel_for(g.voxel_count(), [&](std::int64_t n0, std::int64_t n1) {
    for (std::int64_t n = n0; n < n1; ++n) {
      const Index3 ijk = g.index_of(n);
      const Vec3 world = g.world_from_voxel(Vec3(static_cast<double>(ijk[0]), static_cast<double>(ijk[1]),
                                                 static_cast<double>(ijk[2])));
      const auto v = static_cast<std::size_t>(n);
      out.vectors()[v] = a.apply(world + field.vectors()[v]) - world;
    }
  });
  return out;
}

bool sample_field(const DisplacementField& field, const Vec3& world, Vec3& out) {
  const Vec3 idx = field.grid().voxel_from_world(world);
  const Index3& d = field.grid().dims();
  AxisWeights wx, wy, wz;
  if (!linear_axis(idx[0], d[0], false, wx) || !linear_axis(idx[1], d[1], false, wy) ||
      !linear_axis(idx[2], d[2], false, wz))
    return false;
  const auto& vecs = field.vectors();
  out = trilinear(d, wx, wy, wz, [&vecs](std::int64_t n) -> Vec3 { return vecs[static_cast<std::size_t>(n)]; });
  return true;
}

DisplacementField resample_field(const DisplacementField& field, const Grid& target) {
  DisplacementField out = DisplacementField::zero(target);
  const Index3& d = field.grid().dims();
  const auto& vecs = field.vectors();
  const Mat4 index_map = field.grid().world_to_voxel() * target.voxel_to_world();
  const Mat3 lin = index_map.topLeftCorner<3, 3>();
  const Vec3 off = index_map.topRightCorner<3, 1>();
  parallel_for(target.voxel_count(), [&](std::int64_t n0, std::int64_t n1) {
    for (std::int64_t n = n0; n < n1; ++n) {
      const Index3 ijk = target.index_of(n);
      const Vec3 idx = lin * Vec3(static_cast<double>(ijk[0]), static_cast<double>(ijk[1]),
                                  static_cast<double>(ijk[2])) + off;
      AxisWeights wx, wy, wz;
      linear_axis(idx[0], d[0], true, wx);
      linear_axis(idx[1], d[1], true, wy);
      linear_axis(idx[2], d[2], true, wz);
      out.vectors()[static_cast<std::size_t>(n)] =
          trilinear(d, wx, wy, wz, [&vecs](std::int64_t m) -> Vec3 { return vecs[static_cast<std::size_t>(m)]; });
    }
  });
  return out;
}

CropBox mask_bounding_box(const Mask& mask, std::int64_t margin_voxels) {
  if (margin_voxels < 0) fail(ErrorKind::Validation, "crop margin must be nonnegative");
  const Index3& d = mask.grid().dims();
  Index3 lo{d[0], d[1], d[2]};
  Index3 hi{-1, -1, -1};
  for (std::int64_t k = 0; k < d[2]; ++k)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t i = 0; i < d[0]; ++i) {
        if (!mask.at(i, j, k)) continue;
        const Index3 p{i, j, k};
        for (std::size_t a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], p[a]);
          hi[a] = std::max(hi[a], p[a]);
        }
      }
  if (hi[0] < 0) fail(ErrorKind::Validation, "empty mask");
  CropBox box;
  for (std::size_t a = 0; a < 3; ++a) {
    const std::int64_t l = std::max<std::int64_t>(0, lo[a] - margin_voxels);
    const std::int64_t h = std::min<std::int64_t>(d[a] - 1, hi[a] + margin_voxels);
    box.lo[a] = l;
    box.size[a] = h - l + 1;
  }
  return box;
}

Grid crop_grid(const Grid& grid, const CropBox& box) {
  for (std::size_t a = 0; a < 3; ++a) {
    if (box.lo[a] < 0 || box.size[a] < 1 || box.lo[a] + box.size[a] > grid.dims()[a])
      fail(ErrorKind::Geometry, "crop box outside the grid");
  }
  Mat4 m = grid.voxel_to_world();
  m.topRightCorner<3, 1>() = grid.world_from_voxel(
      Vec3(static_cast<double>(box.lo[0]), static_cast<double>(box.lo[1]), static_cast<double>(box.lo[2])));
  return Grid(box.size, m);
}

Volume crop(const Volume& volume, const CropBox& box) {
  Grid g = crop_grid(volume.grid(), box);
  std::vector<double> data(static_cast<std::size_t>(g.voxel_count()));
  std::size_t n = 0;
  for (std::int64_t k = 0; k < box.size[2]; ++k)
    for (std::int64_t j = 0; j < box.size[1]; ++j)
      for (std::int64_t i = 0; i < box.size[0]; ++i)
        data[n++] = volume.at(box.lo[0] + i, box.lo[1] + j, box.lo[2] + k);
  return Volume(std::move(g), std::move(data));
}

Mask crop(const Mask& mask, const CropBox& box) {
  Grid g = crop_grid(mask.grid(), box);
  std::vector<std::uint8_t> data(static_cast<std::size_t>(g.voxel_count()));
  std::size_t n = 0;
  for (std::int64_t k = 0; k < box.size[2]; ++k)
    for (std::int64_t j = 0; j < box.size[1]; ++j)
      for (std::int64_t i = 0; i < box.size[0]; ++i)
        data[n++] = mask.at(box.lo[0] + i, box.lo[1] + j, box.lo[2] + k) ? 1 : 0;
  return Mask(std::move(g), std::move(data));
}

DisplacementField embed_field(const DisplacementField& cropped, const Grid& full, const CropBox& box) {
  if (!crop_grid(full, box).matches(cropped.grid()))
    fail(ErrorKind::Geometry, "cropped field does not lie on the crop of the full grid");
  DisplacementField out = DisplacementField::zero(full);
  std::size_t n = 0;
  for (std::int64_t k = 0; k < box.size[2]; ++k)
    for (std::int64_t j = 0; j < box.size[1]; ++j)
      for (std::int64_t i = 0; i < box.size[0]; ++i) {
        const auto dst = full.linear_index(box.lo[0] + i, box.lo[1] + j, box.lo[2] + k);
        out.vectors()[static_cast<std::size_t>(dst)] = cropped.vectors()[n++];
      }
  return out;
}

Volume crop_to_mask(const Volume& volume, const Mask& mask, std::int64_t margin_voxels) {
  if (!mask.grid().matches(volume.grid()))
    fail(ErrorKind::Validation, "mask grid does not match volume grid");
  return crop(volume, mask_bounding_box(mask, margin_voxels));
}

Volume jacobian_determinants(const DisplacementField& field) {
  const Grid& g = field.grid();
  const Index3& d = g.dims();
  const Mat3 inv = g.linear().inverse();
  Volume out(g, 0.0);
  auto* dst = out.data().data();
  const auto& f = field.vectors();
  parallel_for(g.voxel_count(), [&](std::int64_t n0, std::int64_t n1) {
    for (std::int64_t n = n0; n < n1; ++n) {
      const Index3 p = g.index_of(n);
      Mat3 grad;  // column a: derivative along voxel axis a
      for (std::size_t a = 0; a < 3; ++a) {
        const std::int64_t len = d[a];
        if (len == 1) {
          grad.col(static_cast<int>(a)).setZero();
          continue;
        }
        Index3 lo = p, hi = p;
        double h = 2.0;
        if (p[a] == 0) {
          hi[a] += 1;
          h = 1.0;
        } else if (p[a] == len - 1) {
          lo[a] -= 1;
          h = 1.0;
        } else {
          lo[a] -= 1;
          hi[a] += 1;
        }
        grad.col(static_cast<int>(a)) =
            (f[static_cast<std::size_t>(g.linear_index(hi[0], hi[1], hi[2]))] -
             f[static_cast<std::size_t>(g.linear_index(lo[0], lo[1], lo[2]))]) / h;
      }
      const Mat3 jac = Mat3::Identity() + grad * inv;
      dst[n] = jac.determinant();
    }
  });
  return out;
}

void zero_outside(DisplacementField& field, const Mask& mask) {
  if (!mask.grid().matches(field.grid()))
    fail(ErrorKind::Validation, "mask grid does not match field grid");
  for (std::size_t n = 0; n < field.vectors().size(); ++n) {
    if (!mask.data()[n]) field.vectors()[n].setZero();
  }
}

}  // namespace bmreg

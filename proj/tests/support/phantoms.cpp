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
#include "phantoms.hpp"

#include <cmath>
#include <numbers>

#include "resample.hpp"

namespace bmreg::testing {

Volume smooth_noise(const Grid& grid, std::initializer_list<double> sigmas_mm, std::uint64_t seed) {
  std::vector<double> total(static_cast<std::size_t>(grid.voxel_count()), 0.0);
  std::uint64_t layer_seed = seed;
  for (double sigma : sigmas_mm) {
    std::mt19937_64 rng(layer_seed++);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<double> noise(total.size());
    for (auto& v : noise) v = n01(rng);
    const Vec3 s(sigma / grid.spacing()[0], sigma / grid.spacing()[1], sigma / grid.spacing()[2]);
    const Volume smooth = gaussian_smooth(Volume(grid, std::move(noise)), s, Boundary::Clamp);
    double mean = 0.0, sq = 0.0;
    for (double v : smooth.data()) mean += v;
    mean /= static_cast<double>(total.size());
    for (double v : smooth.data()) sq += (v - mean) * (v - mean);
    const double sd = std::sqrt(sq / static_cast<double>(total.size()));
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += (smooth.data()[i] - mean) / sd;
  }
  double mean = 0.0, sq = 0.0;
  for (double v : total) mean += v;
  mean /= static_cast<double>(total.size());
  for (double v : total) sq += (v - mean) * (v - mean);
  const double sd = std::sqrt(sq / static_cast<double>(total.size()));
  for (double& v : total) v = (v - mean) / sd;
  return Volume(grid, std::move(total));
}

PaddedTexture padded_texture(const Grid& target, double pad_mm, std::initializer_list<double> sigmas_mm,
                             std::uint64_t seed) {
  const Vec3 sp = target.spacing();
  Index3 dims;
  Vec3 origin = target.world_from_voxel(Vec3::Zero());
  for (int a = 0; a < 3; ++a) {
    const auto pad = static_cast<std::int64_t>(std::ceil(pad_mm / sp[a]));
    dims[static_cast<std::size_t>(a)] = target.dims()[static_cast<std::size_t>(a)] + 2 * pad;
    origin[a] -= static_cast<double>(pad) * sp[a];
  }
  const Grid big = Grid::from_spacing(dims, sp, origin);
  return {smooth_noise(big, sigmas_mm, seed), target};
}

Volume sample_through(const Volume& source, const AffineTransform& map, const Grid& grid) {
  const Mat4 index_map = source.grid().world_to_voxel() * map.matrix() * grid.voxel_to_world();
  std::vector<double> out(static_cast<std::size_t>(grid.voxel_count()));
  for (std::int64_t n = 0; n < grid.voxel_count(); ++n) {
    const Index3 p = grid.index_of(n);
    const Vec3 idx = (index_map * Eigen::Vector4d(static_cast<double>(p[0]), static_cast<double>(p[1]),
                                                  static_cast<double>(p[2]), 1.0))
                         .head<3>();
    out[static_cast<std::size_t>(n)] = sample_trilinear_clamped(source, idx);
  }
  return Volume(grid, std::move(out));
}

AffineTransform make_affine(const Vec3& rotation_deg, const Vec3& scale, const Vec3& translation,
                            const Vec3& center) {
  const double k = std::numbers::pi / 180.0;
  const Mat3 r = (Eigen::AngleAxisd(rotation_deg[2] * k, Vec3::UnitZ()) *
                  Eigen::AngleAxisd(rotation_deg[1] * k, Vec3::UnitY()) *
                  Eigen::AngleAxisd(rotation_deg[0] * k, Vec3::UnitX()))
                     .toRotationMatrix();
  const Mat3 lin = r * scale.asDiagonal();
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = lin;
  m.topRightCorner<3, 1>() = center - lin * center + translation;
  return AffineTransform(m);
}

AffineTransform random_affine(std::mt19937_64& rng, double max_translation, double max_rotation_deg,
                              double max_scale, const Vec3& center) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  auto direction = [&] {
    Vec3 d(n01(rng), n01(rng), n01(rng));
    return Vec3(d / d.norm());
  };
  const double k = std::numbers::pi / 180.0;
  const Mat3 rot = Eigen::AngleAxisd(max_rotation_deg * k * u(rng), direction()).toRotationMatrix();
  Vec3 scale;
  for (int a = 0; a < 3; ++a) scale[a] = 1.0 + max_scale * u(rng);
  const Vec3 trans = max_translation * std::abs(u(rng)) * direction();
  const Mat3 lin = rot * scale.asDiagonal();
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = lin;
  m.topRightCorner<3, 1>() = center - lin * center + trans;
  return AffineTransform(m);
}

Vec3 bump_displacement(const Vec3& x, const Vec3& center, double peak_mm, double sigma_mm, const Vec3& direction) {
  const double r2 = (x - center).squaredNorm();
  return peak_mm * std::exp(-r2 / (2.0 * sigma_mm * sigma_mm)) * direction.normalized();
}

DisplacementField bump_field(const Grid& grid, const Vec3& center, double peak_mm, double sigma_mm,
                             const Vec3& direction) {
  std::vector<Vec3> v(static_cast<std::size_t>(grid.voxel_count()));
  for (std::int64_t n = 0; n < grid.voxel_count(); ++n) {
    const Index3 p = grid.index_of(n);
    const Vec3 x = grid.world_from_voxel(
        Vec3(static_cast<double>(p[0]), static_cast<double>(p[1]), static_cast<double>(p[2])));
    v[static_cast<std::size_t>(n)] = bump_displacement(x, center, peak_mm, sigma_mm, direction);
  }
  return DisplacementField(grid, std::move(v));
}

Volume sample_through_field(const Volume& source, const DisplacementField& u) {
  const Grid& grid = u.grid();
  std::vector<double> out(static_cast<std::size_t>(grid.voxel_count()));
  for (std::int64_t n = 0; n < grid.voxel_count(); ++n) {
    const Index3 p = grid.index_of(n);
    const Vec3 x = grid.world_from_voxel(
        Vec3(static_cast<double>(p[0]), static_cast<double>(p[1]), static_cast<double>(p[2])));
    out[static_cast<std::size_t>(n)] =
        sample_trilinear_clamped(source, source.grid().voxel_from_world(x + u.vectors()[static_cast<std::size_t>(n)]));
  }
  return Volume(grid, std::move(out));
}

Mask sphere_mask(const Grid& grid, const Vec3& center, double radius_mm) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(grid.voxel_count()));
  for (std::int64_t n = 0; n < grid.voxel_count(); ++n) {
    const Index3 p = grid.index_of(n);
    const Vec3 x = grid.world_from_voxel(
        Vec3(static_cast<double>(p[0]), static_cast<double>(p[1]), static_cast<double>(p[2])));
    m[static_cast<std::size_t>(n)] = (x - center).norm() <= radius_mm ? 1 : 0;
  }
  return Mask(grid, std::move(m));
}

double max_corner_error(const AffineTransform& a, const AffineTransform& b, const Grid& grid) {
  double worst = 0.0;
  for (const Vec3& c : grid.corner_points()) worst = std::max(worst, (a.apply(c) - b.apply(c)).norm());
  return worst;
}

BumpPhantom bump_phantom(int size, double roi_radius_mm, std::uint64_t seed) {
  const Grid g = Grid::from_spacing({size, size, size}, Vec3(1, 1, 1));
  const PaddedTexture tex = padded_texture(g, 10.0, {2.0}, seed);
  const Vec3 c = g.world_center();
  DisplacementField u = bump_field(g, c, 3.0, 6.0, Vec3(1, 1, 0));
  Volume fixed = sample_through_field(tex.source, u);
  return {std::move(fixed), sample_through(tex.source, AffineTransform(), g), sphere_mask(g, c, roi_radius_mm),
          std::move(u), c};
}

PlantedOutlierPhantom planted_outlier_phantom(int size, std::uint64_t seed, const Vec3& cell_offset_mm) {
  const Grid g = Grid::from_spacing({size, size, size}, Vec3(1, 1, 1));
  const PaddedTexture tex = padded_texture(g, 15.0, {3.0}, seed);
  const AffineTransform truth = AffineTransform::translation(Vec3(2.0, -1.0, 1.0));
  const AffineTransform inv = truth.inverse();
  Volume moving = sample_through(tex.source, inv, g);
  const Volume offset = sample_through(tex.source, compose(AffineTransform::translation(-cell_offset_mm), inv), g);

  constexpr std::int64_t kCell = 8;
  const std::int64_t cells = (size + kCell - 1) / kCell;
  std::vector<std::int64_t> order(static_cast<std::size_t>(cells * cells * cells));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::int64_t>(i);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::uint8_t> corrupt(order.size(), 0);
  for (std::size_t i = 0; i < static_cast<std::size_t>(std::ceil(0.3 * static_cast<double>(order.size()))); ++i)
    corrupt[static_cast<std::size_t>(order[i])] = 1;

  auto cell_of = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
    return static_cast<std::size_t>(i / kCell + cells * (j / kCell + cells * (k / kCell)));
  };
  // The mask keeps clean voxels at least 3 voxels from corrupted cells and
  // 4 voxels from the volume edge.
  Mask mask(g, false);
  for (std::int64_t n = 0; n < g.voxel_count(); ++n) {
    const Index3 p = g.index_of(n);
    if (corrupt[cell_of(p[0], p[1], p[2])]) {
      moving.data()[static_cast<std::size_t>(n)] = offset.data()[static_cast<std::size_t>(n)];
      continue;
    }
    bool keep = true;
    for (int a = 0; a < 3; ++a) keep = keep && p[static_cast<std::size_t>(a)] >= 4 && p[static_cast<std::size_t>(a)] < size - 4;
    for (std::int64_t dz = -3; keep && dz <= 3; dz += 3)
      for (std::int64_t dy = -3; keep && dy <= 3; dy += 3)
        for (std::int64_t dx = -3; keep && dx <= 3; dx += 3)
          keep = !corrupt[cell_of(p[0] + dx, p[1] + dy, p[2] + dz)];
    mask.data()[static_cast<std::size_t>(n)] = keep;
  }
  return {sample_through(tex.source, AffineTransform(), g), std::move(moving), std::move(mask), truth};
}

double mean_residual_near(const DisplacementField& f, const DisplacementField& truth, const Vec3& center,
                          double radius_mm) {
  const Grid& g = f.grid();
  double sum = 0.0;
  int count = 0;
  for (std::int64_t n = 0; n < g.voxel_count(); ++n) {
    const Index3 p = g.index_of(n);
    const Vec3 x = g.world_from_voxel(
        Vec3(static_cast<double>(p[0]), static_cast<double>(p[1]), static_cast<double>(p[2])));
    if ((x - center).norm() > radius_mm) continue;
    sum += (f.vectors()[static_cast<std::size_t>(n)] - truth.vectors()[static_cast<std::size_t>(n)]).norm();
    ++count;
  }
  return count > 0 ? sum / count : 0.0;
}

}  // namespace bmreg::testing

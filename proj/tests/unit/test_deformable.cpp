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
#include <doctest.h>

#include <cmath>
#include <vector>

#include "deformable.hpp"
#include "phantoms.hpp"
#include "resample.hpp"
#include "ssc.hpp"

using namespace bmreg;
using namespace bmreg::testing;

namespace {

const BumpPhantom& phantom() {
  static const BumpPhantom p = bump_phantom();
  return p;
}

bool zero_outside_roi(const DisplacementField& f, const Mask& roi) {
  for (std::size_t i = 0; i < f.vectors().size(); ++i)
    if (!roi.data()[i] && (f.vectors()[i][0] != 0.0 || f.vectors()[i][1] != 0.0 || f.vectors()[i][2] != 0.0))
      return false;
  return true;
}

bool monotone_per_level(const DeformableDiagnostics& diag) {
  for (std::size_t i = 1; i < diag.iterations.size(); ++i) {
    const auto& a = diag.iterations[i - 1];
    const auto& b = diag.iterations[i];
    if (a.level == b.level && b.objective > a.objective + 1e-9) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("identical images give a zero field") {
  const BumpPhantom& p = phantom();
  const auto [f, diag] = register_deformable(p.moving, p.moving, p.roi, DeformableConfig{});
  CHECK(f.is_identity());
  CHECK(!diag.iterations.empty());
}

TEST_CASE("bump deformation is recovered inside the roi") {
  const BumpPhantom& p = phantom();
  const auto [f, diag] = register_deformable(p.fixed, p.moving, p.roi, DeformableConfig{});
  const double before = ssc_mse(p.fixed, p.moving, &p.roi, SscParams{});
  const double after = ssc_mse(p.fixed, apply_field(p.moving, f), &p.roi, SscParams{});
  CHECK(after <= 0.5 * before);
  CHECK(mean_residual_near(f, p.truth, p.center, 2.0) < 1.5);
  CHECK(zero_outside_roi(f, p.roi));
  CHECK(monotone_per_level(diag));

  const Volume jac = jacobian_determinants(f);
  std::int64_t positive = 0;
  for (double d : jac.data()) positive += d > 0.0;
  CHECK(static_cast<double>(positive) >= 0.99 * static_cast<double>(jac.data().size()));

  const DeformableConfig cfg;
  const double bound = cfg.step_size * cfg.iterations_per_level * static_cast<double>(cfg.levels.size());
  CHECK(f.max_magnitude() <= bound);
  for (const auto& r : diag.iterations) CHECK(r.step_mm <= cfg.step_size + 1e-12);
}

TEST_CASE("local NCC similarity also recovers the bump") {
  const BumpPhantom& p = phantom();
  DeformableConfig cfg;
  cfg.similarity = DeformableSimilarity::LocalNcc;
  const auto [f, diag] = register_deformable(p.fixed, p.moving, p.roi, cfg);
  const double before = ssc_mse(p.fixed, p.moving, &p.roi, SscParams{});
  const double after = ssc_mse(p.fixed, apply_field(p.moving, f), &p.roi, SscParams{});
  CHECK(after <= 0.5 * before);
  CHECK(zero_outside_roi(f, p.roi));
  CHECK(monotone_per_level(diag));
}

TEST_CASE("heavy smoothing suppresses the field") {
  const BumpPhantom& p = phantom();
  DeformableConfig cfg;
  cfg.smoothness = 100.0;
  const auto [f, diag] = register_deformable(p.fixed, p.moving, p.roi, cfg);
  CHECK(f.max_magnitude() < 0.1);
  CHECK(zero_outside_roi(f, p.roi));
}

TEST_CASE("roi away from the deformation keeps the field exactly zero") {
  const Grid g = Grid::from_spacing({48, 48, 48}, Vec3(1, 1, 1));
  const PaddedTexture tex = padded_texture(g, 10.0, {2.0}, 7);
  DisplacementField u = bump_field(g, g.world_center(), 3.0, 6.0, Vec3(1, 1, 0));
  zero_outside(u, sphere_mask(g, g.world_center(), 15.0));
  const Volume fixed = sample_through_field(tex.source, u);
  const Volume moving = sample_through(tex.source, AffineTransform(), g);
  Mask corner(g);
  for (std::int64_t k = 0; k < 12; ++k)
    for (std::int64_t j = 0; j < 12; ++j)
      for (std::int64_t i = 0; i < 12; ++i) corner.data()[static_cast<std::size_t>(g.linear_index(i, j, k))] = 1;
  const auto [f, diag] = register_deformable(fixed, moving, corner, DeformableConfig{});
  CHECK(f.is_identity());
}

TEST_CASE("deformable output is independent of the worker count") {
  const BumpPhantom& p = phantom();
  DeformableConfig cfg;
  cfg.iterations_per_level = 10;
  set_thread_count(1);
  const DisplacementField a = register_deformable(p.fixed, p.moving, p.roi, cfg).first;
  set_thread_count(8);
  const DisplacementField b = register_deformable(p.fixed, p.moving, p.roi, cfg).first;
  set_thread_count(0);
  CHECK(a.vectors() == b.vectors());
}

TEST_CASE("deformable errors") {
  const BumpPhantom& p = phantom();
  const Volume other(Grid::from_spacing({48, 48, 48}, Vec3(2, 1, 1)), 0.0);
  CHECK_THROWS_AS(register_deformable(p.fixed, other, p.roi, DeformableConfig{}), Error);
  CHECK_THROWS_AS(register_deformable(p.fixed, p.moving, Mask(p.fixed.grid(), false), DeformableConfig{}), Error);
  DeformableConfig bad;
  bad.smoothness = -1.0;
  CHECK_THROWS_AS(register_deformable(p.fixed, p.moving, p.roi, bad), Error);
  bad = DeformableConfig{};
  bad.levels = {1.0, 2.0};
  CHECK_THROWS_AS(register_deformable(p.fixed, p.moving, p.roi, bad), Error);
  bad = DeformableConfig{};
  bad.levels = {};
  CHECK_THROWS_AS(register_deformable(p.fixed, p.moving, p.roi, bad), Error);
  bad = DeformableConfig{};
  bad.iterations_per_level = 0;
  CHECK_THROWS_AS(register_deformable(p.fixed, p.moving, p.roi, bad), Error);
  bad = DeformableConfig{};
  bad.step_size = 0.0;
  CHECK_THROWS_AS(register_deformable(p.fixed, p.moving, p.roi, bad), Error);
}

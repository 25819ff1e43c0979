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
#include "affine_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "resample.hpp"

namespace bmreg {

void AffineStageConfig::validate() const {
  if (levels.empty()) fail(ErrorKind::Validation, "affine stage needs at least one level");
  for (std::size_t l = 0; l < levels.size(); ++l) {
    if (!(levels[l].spacing_mm > 0.0)) fail(ErrorKind::Validation, "level spacing must be > 0");
    if (levels[l].outer_iterations < 1) fail(ErrorKind::Validation, "level outer_iterations must be >= 1");
    if (l > 0 && !(levels[l].spacing_mm < levels[l - 1].spacing_mm))
      fail(ErrorKind::Validation, "level spacings must be strictly decreasing");
  }
  block_match.validate();
  lts.validate();
  if (!std::isfinite(background)) fail(ErrorKind::Validation, "background must be finite");
}

AffineTransform initialize_center_alignment(const Volume& fixed, const Volume& moving) {
  return AffineTransform::translation(moving.grid().world_center() - fixed.grid().world_center());
}

Volume clamp_to_percentiles(const Volume& volume, double lower, double upper) {
  std::vector<double> sorted(volume.data().begin(), volume.data().end());
  if (sorted.empty()) return volume;
  auto quantile = [&](double q) {
    const auto k = static_cast<std::size_t>(std::llround(q * static_cast<double>(sorted.size() - 1)));
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
    return sorted[k];
  };
  const double lo = quantile(lower);
  const double hi = quantile(upper);
  std::vector<double> out(volume.data().begin(), volume.data().end());
  for (auto& v : out) v = std::clamp(v, lo, hi);
  return Volume(volume.grid(), std::move(out));
}

std::pair<AffineTransform, AffineDiagnostics> register_affine(const Volume& fixed, const Volume& moving,
                                                              const AffineStageConfig& config) {
  config.validate();
  AffineTransform current;
  switch (config.initializer) {
    case AffineInitializer::CenterAlignment: current = initialize_center_alignment(fixed, moving); break;
    case AffineInitializer::Identity: current = AffineTransform::identity(); break;
    case AffineInitializer::Given: current = config.initial; break;
  }

  AffineDiagnostics diag;
  for (std::size_t l = 0; l < config.levels.size(); ++l) {
    const AffineLevel& level = config.levels[l];
    const Volume fixed_level = clamp_to_percentiles(resample_to_resolution(fixed, level.spacing_mm), 0.005, 0.995);
    const Volume moving_level = clamp_to_percentiles(resample_to_resolution(moving, level.spacing_mm), 0.005, 0.995);
    const std::vector<ActiveBlock> active = partition_and_select(fixed_level, config.block_match);
    const std::array<Vec3, 8> corners = fixed_level.grid().corner_points();

    for (int it = 0; it < level.outer_iterations; ++it) {
      const Volume warped = apply_affine(moving_level, current, fixed_level.grid(), Interpolation::Trilinear,
                                         config.background);
      CorrespondenceSet pairs = match_blocks(fixed_level, warped, active, config.block_match);
      if (pairs.pairs.size() < 4) {
        std::ostringstream os;
        os << "no usable correspondences at level " << l << " (" << level.spacing_mm << " mm): "
           << pairs.pairs.size() << " of " << active.size() << " active blocks matched";
        fail(ErrorKind::Stage, os.str());
      }
      if (ceil_fraction(config.lts.inlier_proportion, pairs.pairs.size()) < 4) {
        std::ostringstream os;
        os << "too few correspondences at level " << l << " for LTS proportion "
           << config.lts.inlier_proportion << " (" << pairs.pairs.size() << " pairs)";
        fail(ErrorKind::Stage, os.str());
      }
      auto [increment, report] = fit_affine_lts(pairs, config.lts);
      const AffineTransform next = compose(current, increment);
      if (!(std::abs(next.linear().determinant()) > 1e-6))
        fail(ErrorKind::Stage, "affine estimate collapsed (|det| <= 1e-6)");
      const double motion = max_point_distance(increment, AffineTransform::identity(), corners);

      AffineIterationRecord rec;
      rec.level = static_cast<int>(l);
      rec.spacing_mm = level.spacing_mm;
      rec.iteration = it;
      rec.active_blocks = active.size();
      rec.correspondences = pairs.pairs.size();
      rec.inliers = report.inlier_count;
      rec.trimmed_rms_mm = report.final_trimmed_rms_mm;
      rec.initial_trimmed_rms_mm = report.trimmed_rms_trace.front();
      rec.motion_mm = motion;
      rec.lts_iterations = report.iterations_used;
      rec.lts_converged = report.converged;
      diag.iterations.push_back(rec);

      current = next;
      if (motion < 0.1 * level.spacing_mm) break;
    }
  }
  return {current, diag};
}

}  // namespace bmreg

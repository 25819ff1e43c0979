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
#include "evaluation.hpp"

#include <cmath>

#include "resample.hpp"

namespace bmreg {

TreResult compute_tre(const LandmarkSet& fixed, const LandmarkSet& moving, const AffineTransform& transform,
                      const DisplacementField* field) {
  fixed.validate();
  moving.validate();
  if (fixed.size() != moving.size())
    fail(ErrorKind::Validation, "landmark count mismatch: " + std::to_string(fixed.size()) + " fixed vs " +
                                    std::to_string(moving.size()) + " moving");
  if (fixed.size() == 0) fail(ErrorKind::Validation, "no landmarks");
  TreResult out;
  out.per_landmark_mm.resize(fixed.size());
  out.affine_only.assign(fixed.size(), false);
  double total = 0.0;
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    Vec3 p = fixed.points[i];
    if (field != nullptr) {
      Vec3 d;
      if (sample_field(*field, p, d)) {
        p += d;
      } else {
        out.affine_only[i] = true;
      }
    }
    const double dist = (transform.apply(p) - moving.points[i]).norm();
    out.per_landmark_mm[i] = dist;
    total += dist;
  }
  out.mean_mm = total / static_cast<double>(fixed.size());
  return out;
}

std::vector<double> default_grid_candidates() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }

GridSearchResult grid_search_proportion(const Volume& fixed, const Volume& moving, const AffineStageConfig& config,
                                        const std::vector<double>& candidates, const Mask* mask,
                                        const SscParams& ssc) {
  if (candidates.empty()) fail(ErrorKind::Validation, "grid search needs at least one candidate proportion");
  for (double p : candidates)
    if (!(p > 0.0 && p <= 1.0))
      fail(ErrorKind::Validation, "grid search candidate out of (0, 1]: " + std::to_string(p));
  if (mask != nullptr && !mask->grid().matches(fixed.grid()))
    fail(ErrorKind::Validation, "grid search mask grid does not match fixed grid");

  const SscDescriptor fixed_desc = compute_ssc(fixed, ssc);
  GridSearchResult result;
  bool any = false;
  std::string causes;
  for (double p : candidates) {
    GridSearchEntry entry;
    entry.proportion = p;
    try {
      AffineStageConfig cfg = config;
      cfg.lts.inlier_proportion = p;
      entry.transform = register_affine(fixed, moving, cfg).first;
      const Volume warped = apply_affine(moving, entry.transform, fixed.grid(), Interpolation::Trilinear,
                                         config.background);
      entry.ssc_mse = ssc_mse(fixed_desc, compute_ssc(warped, ssc), mask);
      entry.ok = true;
    } catch (const Error& e) {
      entry.error = e.what();
      if (!causes.empty()) causes += "; ";
      causes += "p=" + std::to_string(p) + ": " + e.what();
    }
    if (entry.ok) {
      const bool better = !any || entry.ssc_mse < result.best_score ||
                          (entry.ssc_mse == result.best_score && p < result.best_proportion);
      if (better) {
        result.best_score = entry.ssc_mse;
        result.best_proportion = p;
        any = true;
      }
    }
    result.table.push_back(std::move(entry));
  }
  if (!any) fail(ErrorKind::Stage, "every grid search candidate failed: " + causes);
  return result;
}

const char* phase_name(Phase phase) noexcept {
  switch (phase) {
    case Phase::Original: return "original";
    case Phase::Affine: return "affine";
    case Phase::Deformable: return "deformable";
  }
  return "unknown";
}

namespace {

Volume difference(const Volume& fixed, const Volume& warped) {
  std::vector<double> d(fixed.data().size());
  for (std::size_t v = 0; v < d.size(); ++v) d[v] = fixed.data()[v] - warped.data()[v];
  return Volume(fixed.grid(), std::move(d));
}

}  // namespace

std::vector<PhaseReport> run_phase_report(const PhaseInputs& in) {
  if (in.fixed == nullptr || in.moving == nullptr) fail(ErrorKind::Validation, "phase report needs fixed and moving volumes");
  const Volume& fixed = *in.fixed;
  const bool landmarks = in.fixed_landmarks != nullptr && in.moving_landmarks != nullptr;
  if (in.field != nullptr && !in.field->grid().matches(fixed.grid()))
    fail(ErrorKind::Validation, "phase report field grid does not match fixed grid");
  const SscDescriptor fixed_desc = compute_ssc(fixed, in.ssc);

  std::vector<PhaseReport> out;
  auto add = [&](Phase phase, const Volume& warped, const AffineTransform& t, const DisplacementField* f) {
    std::optional<TreResult> tre;
    if (landmarks) tre = compute_tre(*in.fixed_landmarks, *in.moving_landmarks, t, f);
    out.push_back(PhaseReport{phase, ssc_mse(fixed_desc, compute_ssc(warped, in.ssc), in.mask), std::move(tre),
                              difference(fixed, warped)});
  };

  const AffineTransform identity;
  add(Phase::Original, apply_affine(*in.moving, identity, fixed.grid(), Interpolation::Trilinear, in.background),
      identity, nullptr);
  add(Phase::Affine, apply_affine(*in.moving, in.affine, fixed.grid(), Interpolation::Trilinear, in.background),
      in.affine, nullptr);
  if (in.field != nullptr) {
    const DisplacementField total = compose_affine_then_field(in.affine, *in.field);
    add(Phase::Deformable, apply_field(*in.moving, total, Interpolation::Trilinear, in.background), in.affine,
        in.field);
  }
  return out;
}

}  // namespace bmreg

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
#include "lts.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace bmreg {

void LtsParams::validate() const {
  if (!(inlier_proportion > 0.0 && inlier_proportion <= 1.0))
    fail(ErrorKind::Validation, "LTS inlier_proportion must be in (0, 1]");
  if (max_iterations < 1) fail(ErrorKind::Validation, "LTS max_iterations must be >= 1");
  if (!(convergence_tol > 0.0)) fail(ErrorKind::Validation, "LTS convergence_tol must be > 0");
}

namespace {

struct Fit {
  AffineTransform transform;
  double condition = 0.0;
};

Fit least_squares(std::span<const Correspondence> pairs, std::span<const std::size_t> subset) {
  const std::size_t n = subset.size();
  if (n < 4) {
    fail(ErrorKind::Rank, "affine fit needs at least 4 correspondences, got " + std::to_string(n));
  }
  Vec3 cf = Vec3::Zero(), cm = Vec3::Zero();
  for (std::size_t s : subset) {
    cf += pairs[s].fixed_point;
    cm += pairs[s].moving_point;
  }
  cf /= static_cast<double>(n);
  cm /= static_cast<double>(n);
  Mat3 ff = Mat3::Zero(), mf = Mat3::Zero();
  for (std::size_t s : subset) {
    const Vec3 f = pairs[s].fixed_point - cf;
    const Vec3 m = pairs[s].moving_point - cm;
    ff += f * f.transpose();
    mf += m * f.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(ff);
  const double smallest = std::sqrt(std::max(0.0, eig.eigenvalues()[0]));
  const double largest = std::sqrt(std::max(0.0, eig.eigenvalues()[2]));
  if (!(smallest > 1e-9)) {
    std::ostringstream os;
    os << "fixed points are coplanar or collinear (smallest singular value " << smallest << ")";
    fail(ErrorKind::Rank, os.str());
  }
  // Normal equations of the centered problem: L * FF = MF.
  const Mat3 lin = ff.ldlt().solve(mf.transpose()).transpose();
  const double det = lin.determinant();
  if (!(std::abs(det) > 1e-12) || !lin.allFinite()) {
    fail(ErrorKind::Rank, "fitted linear part is singular (moving points degenerate)");
  }
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = lin;
  m.topRightCorner<3, 1>() = cm - lin * cf;
  return {AffineTransform(m), largest / smallest};
}

}  // namespace

AffineTransform fit_affine_least_squares(std::span<const Correspondence> pairs) {
  std::vector<std::size_t> all(pairs.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return least_squares(pairs, all).transform;
}

std::pair<AffineTransform, LtsReport> fit_affine_lts(const CorrespondenceSet& input, const LtsParams& params) {
  params.validate();
  const std::size_t n = input.pairs.size();
  const std::size_t keep = ceil_fraction(params.inlier_proportion, n);
  if (keep < 4) {
    fail(ErrorKind::Validation, "LTS keeps " + std::to_string(keep) + " of " + std::to_string(n) +
                                    " pairs; at least 4 are required");
  }

  // Canonical order makes the result independent of the input order.
  std::vector<std::size_t> canon(n);
  std::iota(canon.begin(), canon.end(), std::size_t{0});
  auto key_less = [&](std::size_t l, std::size_t r) {
    const auto& a = input.pairs[l];
    const auto& b = input.pairs[r];
    for (int c = 0; c < 3; ++c)
      if (a.fixed_point[c] != b.fixed_point[c]) return a.fixed_point[c] < b.fixed_point[c];
    for (int c = 0; c < 3; ++c)
      if (a.moving_point[c] != b.moving_point[c]) return a.moving_point[c] < b.moving_point[c];
    return a.score < b.score;
  };
  std::stable_sort(canon.begin(), canon.end(), key_less);
  std::vector<Correspondence> pairs(n);
  for (std::size_t s = 0; s < n; ++s) pairs[s] = input.pairs[canon[s]];

  std::vector<Vec3> fixed_points(n);
  for (std::size_t s = 0; s < n; ++s) fixed_points[s] = pairs[s].fixed_point;

  std::vector<double> residual(n);
  auto trim = [&](const AffineTransform& t, std::vector<std::size_t>& subset) {
    for (std::size_t s = 0; s < n; ++s) residual[s] = (t.apply(pairs[s].fixed_point) - pairs[s].moving_point).squaredNorm();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return residual[l] < residual[r]; });
    subset.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
    std::sort(subset.begin(), subset.end());
    double sse = 0.0;
    for (std::size_t s : subset) sse += residual[s];
    return std::sqrt(sse / static_cast<double>(keep));
  };

  LtsReport report;
  std::vector<std::size_t> fit_set(n);
  std::iota(fit_set.begin(), fit_set.end(), std::size_t{0});
  Fit fit = least_squares(pairs, fit_set);
  std::vector<std::size_t> next;
  report.trimmed_rms_trace.push_back(trim(fit.transform, next));

  for (int it = 0; it < params.max_iterations; ++it) {
    if (next == fit_set) {
      report.converged = true;
      break;
    }
    Fit refit = least_squares(pairs, next);
    const double motion = max_point_distance(refit.transform, fit.transform, fixed_points);
    fit = refit;
    fit_set = next;
    ++report.iterations_used;
    report.trimmed_rms_trace.push_back(trim(fit.transform, next));
    if (motion < params.convergence_tol) {
      report.converged = true;
      break;
    }
  }
  if (!report.converged && next == fit_set) report.converged = true;

  report.final_trimmed_rms_mm = report.trimmed_rms_trace.back();
  report.inlier_count = fit_set.size();
  report.condition_estimate = fit.condition;
  report.inliers.reserve(fit_set.size());
  for (std::size_t s : fit_set) report.inliers.push_back(canon[s]);
  std::sort(report.inliers.begin(), report.inliers.end());
  return {fit.transform, report};
}

}  // namespace bmreg

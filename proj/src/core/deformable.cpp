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
#include "deformable.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "resample.hpp"

namespace bmreg {

void DeformableConfig::validate() const {
  if (!(smoothness >= 0.0) || !std::isfinite(smoothness)) fail(ErrorKind::Validation, "smoothness must be >= 0");
  if (levels.empty()) fail(ErrorKind::Validation, "deformable stage needs at least one level");
  for (std::size_t l = 0; l < levels.size(); ++l) {
    if (!(levels[l] > 0.0)) fail(ErrorKind::Validation, "deformable level spacing must be > 0");
    if (l > 0 && !(levels[l] < levels[l - 1]))
      fail(ErrorKind::Validation, "deformable level spacings must be strictly decreasing");
  }
  if (iterations_per_level < 1) fail(ErrorKind::Validation, "iterations_per_level must be >= 1");
  if (!(step_size > 0.0)) fail(ErrorKind::Validation, "step_size must be > 0");
  if (ncc_radius < 1) fail(ErrorKind::Validation, "ncc_radius must be >= 1");
  ssc.validate();
}

namespace {

constexpr int kMaxBacktracks = 5;

struct Sampler {
  std::int64_t i0, i1, j0, j1, k0, k1;
  double tx, ty, tz;
};

inline void axis(double x, std::int64_t d, std::int64_t& lo, std::int64_t& hi, double& t) {
  x = std::clamp(x, 0.0, static_cast<double>(d - 1));
  if (d == 1) {
    lo = hi = 0;
    t = 0.0;
    return;
  }
  lo = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(x)), d - 2);
  hi = lo + 1;
  t = x - static_cast<double>(lo);
}

// Clamped trilinear weights for every voxel of grid displaced by field.
std::vector<Sampler> make_samplers(const DisplacementField& field) {
  const Grid& g = field.grid();
  const Index3& d = g.dims();
  std::vector<Sampler> out(static_cast<std::size_t>(g.voxel_count()));
  parallel_for(g.voxel_count(), [&](std::int64_t n0, std::int64_t n1) {
    for (std::int64_t n = n0; n < n1; ++n) {
      const Index3 p = g.index_of(n);
      const Vec3 base(static_cast<double>(p[0]), static_cast<double>(p[1]), static_cast<double>(p[2]));
      const Vec3 idx = base + g.world_to_voxel().topLeftCorner<3, 3>() * field.vectors()[static_cast<std::size_t>(n)];
      Sampler& s = out[static_cast<std::size_t>(n)];
      axis(idx[0], d[0], s.i0, s.i1, s.tx);
      axis(idx[1], d[1], s.j0, s.j1, s.ty);
      axis(idx[2], d[2], s.k0, s.k1, s.tz);
    }
  });
  return out;
}

inline double sample(const double* img, const Index3& d, const Sampler& s) {
  const std::int64_t nx = d[0], nxy = d[0] * d[1];
  auto at = [&](std::int64_t i, std::int64_t j, std::int64_t k) { return img[i + nx * j + nxy * k]; };
  const double c00 = (1 - s.tx) * at(s.i0, s.j0, s.k0) + s.tx * at(s.i1, s.j0, s.k0);
  const double c10 = (1 - s.tx) * at(s.i0, s.j1, s.k0) + s.tx * at(s.i1, s.j1, s.k0);
  const double c01 = (1 - s.tx) * at(s.i0, s.j0, s.k1) + s.tx * at(s.i1, s.j0, s.k1);
  const double c11 = (1 - s.tx) * at(s.i0, s.j1, s.k1) + s.tx * at(s.i1, s.j1, s.k1);
  return (1 - s.tz) * ((1 - s.ty) * c00 + s.ty * c10) + s.tz * ((1 - s.ty) * c01 + s.ty * c11);
}

// Index-space central difference (one-sided on the boundary).
inline Vec3 index_gradient(const double* img, const Index3& d, const Index3& p) {
  Vec3 g;
  const std::int64_t stride[3] = {1, d[0], d[0] * d[1]};
  const std::int64_t n = p[0] + d[0] * (p[1] + d[1] * p[2]);
  for (int a = 0; a < 3; ++a) {
    const std::int64_t len = d[static_cast<std::size_t>(a)];
    const std::int64_t q = p[static_cast<std::size_t>(a)];
    if (len == 1) {
      g[a] = 0.0;
    } else if (q == 0) {
      g[a] = img[n + stride[a]] - img[n];
    } else if (q == len - 1) {
      g[a] = img[n] - img[n - stride[a]];
    } else {
      g[a] = 0.5 * (img[n + stride[a]] - img[n - stride[a]]);
    }
  }
  return g;
}

class Similarity {
public:
  virtual ~Similarity() = default;
  // Warps the moving data by field and returns the objective over the roi.
  virtual double evaluate(const DisplacementField& field) = 0;
  // Descent direction (world mm) at each voxel for the last evaluated field.
  virtual void descent(std::vector<Vec3>& out) const = 0;
};

class SscSsd final : public Similarity {
public:
  SscSsd(const Volume& fixed, const Volume& moving, const Mask& roi, const SscParams& params)
      : grid_(fixed.grid()), roi_(roi), fixed_(compute_ssc(fixed, params)), moving_(compute_ssc(moving, params)),
        warped_(fixed_.channels().size()), grad_map_(grid_.linear().inverse().transpose()) {}

  double evaluate(const DisplacementField& field) override {
    const std::int64_t n = grid_.voxel_count();
    const Index3& d = grid_.dims();
    const std::vector<Sampler> samplers = make_samplers(field);
    for (int c = 0; c < kSscChannels; ++c) {
      const double* src = moving_.channels().data() + c * n;
      double* dst = warped_.data() + c * n;
      parallel_for(n, [&](std::int64_t v0, std::int64_t v1) {
        for (std::int64_t v = v0; v < v1; ++v) dst[v] = sample(src, d, samplers[static_cast<std::size_t>(v)]);
      });
    }
    const double count = static_cast<double>(roi_.count());
    const double total = ordered_sum(n, [&](std::int64_t v0, std::int64_t v1) {
      double acc = 0.0;
      for (std::int64_t v = v0; v < v1; ++v) {
        if (!roi_.data()[static_cast<std::size_t>(v)]) continue;
        for (int c = 0; c < kSscChannels; ++c) {
          const double diff = fixed_.channels()[static_cast<std::size_t>(c * n + v)] - warped_[static_cast<std::size_t>(c * n + v)];
          acc += diff * diff;
        }
      }
      return acc;
    });
    return total / (count * kSscChannels);
  }

  void descent(std::vector<Vec3>& out) const override {
    const std::int64_t n = grid_.voxel_count();
    const Index3& d = grid_.dims();
    out.assign(static_cast<std::size_t>(n), Vec3::Zero());
    parallel_for(n, [&](std::int64_t v0, std::int64_t v1) {
      for (std::int64_t v = v0; v < v1; ++v) {
        if (!roi_.data()[static_cast<std::size_t>(v)]) continue;
        const Index3 p = grid_.index_of(v);
        Vec3 acc = Vec3::Zero();
        for (int c = 0; c < kSscChannels; ++c) {
          const double* w = warped_.data() + c * n;
          const double diff = fixed_.channels()[static_cast<std::size_t>(c * n + v)] - w[v];
          if (diff != 0.0) acc += diff * index_gradient(w, d, p);
        }
        out[static_cast<std::size_t>(v)] = grad_map_ * acc;
      }
    });
  }

private:
  Grid grid_;
  const Mask& roi_;
  SscDescriptor fixed_;
  SscDescriptor moving_;
  std::vector<double> warped_;
  Mat3 grad_map_;  // index-space gradient to world-space gradient
};

// Separable box sums over a (2r+1)^3 window truncated at the grid edges.
std::vector<double> box_sum(const std::vector<double>& src, const Index3& d, int r) {
  std::vector<double> cur = src, next(src.size());
  const std::int64_t stride[3] = {1, d[0], d[0] * d[1]};
  for (int a = 0; a < 3; ++a) {
    const std::int64_t len = d[static_cast<std::size_t>(a)];
    parallel_for(static_cast<std::int64_t>(src.size()), [&](std::int64_t n0, std::int64_t n1) {
      for (std::int64_t n = n0; n < n1; ++n) {
        const std::int64_t q = (n / stride[a]) % len;
        double acc = 0.0;
        for (std::int64_t t = std::max<std::int64_t>(-r, -q); t <= std::min<std::int64_t>(r, len - 1 - q); ++t)
          acc += cur[static_cast<std::size_t>(n + t * stride[a])];
        next[static_cast<std::size_t>(n)] = acc;
      }
    });
    std::swap(cur, next);
  }
  return cur;
}

class LocalNcc final : public Similarity {
public:
  LocalNcc(const Volume& fixed, const Volume& moving, const Mask& roi, int radius)
      : grid_(fixed.grid()), roi_(roi), radius_(radius),
        fixed_(fixed.data().begin(), fixed.data().end()), moving_(moving.data().begin(), moving.data().end()),
        grad_map_(grid_.linear().inverse().transpose()) {
    const Index3& d = grid_.dims();
    std::vector<double> ones(fixed_.size(), 1.0), ff(fixed_.size());
    for (std::size_t v = 0; v < ff.size(); ++v) ff[v] = fixed_[v] * fixed_[v];
    count_ = box_sum(ones, d, radius_);
    sum_f_ = box_sum(fixed_, d, radius_);
    sum_ff_ = box_sum(ff, d, radius_);
  }

  double evaluate(const DisplacementField& field) override {
    const Index3& d = grid_.dims();
    const std::int64_t n = grid_.voxel_count();
    const std::vector<Sampler> samplers = make_samplers(field);
    warped_.resize(fixed_.size());
    parallel_for(n, [&](std::int64_t v0, std::int64_t v1) {
      for (std::int64_t v = v0; v < v1; ++v) warped_[static_cast<std::size_t>(v)] = sample(moving_.data(), d, samplers[static_cast<std::size_t>(v)]);
    });
    std::vector<double> ww(fixed_.size()), fw(fixed_.size());
    for (std::size_t v = 0; v < ww.size(); ++v) {
      ww[v] = warped_[v] * warped_[v];
      fw[v] = fixed_[v] * warped_[v];
    }
    const std::vector<double> sum_w = box_sum(warped_, d, radius_);
    const std::vector<double> sum_ww = box_sum(ww, d, radius_);
    const std::vector<double> sum_fw = box_sum(fw, d, radius_);
    s_ff_.resize(fixed_.size());
    s_ww_.resize(fixed_.size());
    s_fw_.resize(fixed_.size());
    mean_f_.resize(fixed_.size());
    mean_w_.resize(fixed_.size());
    for (std::size_t v = 0; v < fixed_.size(); ++v) {
      const double c = count_[v];
      mean_f_[v] = sum_f_[v] / c;
      mean_w_[v] = sum_w[v] / c;
      s_ff_[v] = std::max(0.0, sum_ff_[v] - sum_f_[v] * mean_f_[v]);
      s_ww_[v] = std::max(0.0, sum_ww[v] - sum_w[v] * mean_w_[v]);
      s_fw_[v] = sum_fw[v] - sum_f_[v] * mean_w_[v];
    }
    const double count = static_cast<double>(roi_.count());
    const double total = ordered_sum(n, [&](std::int64_t v0, std::int64_t v1) {
      double acc = 0.0;
      for (std::int64_t v = v0; v < v1; ++v) {
        const auto u = static_cast<std::size_t>(v);
        if (!roi_.data()[u]) continue;
        const double denom = s_ff_[u] * s_ww_[u];
        if (denom > kTiny) acc += s_fw_[u] * s_fw_[u] / denom;
      }
      return acc;
    });
    return -total / count;
  }

  void descent(std::vector<Vec3>& out) const override {
    const std::int64_t n = grid_.voxel_count();
    const Index3& d = grid_.dims();
    out.assign(static_cast<std::size_t>(n), Vec3::Zero());
    parallel_for(n, [&](std::int64_t v0, std::int64_t v1) {
      for (std::int64_t v = v0; v < v1; ++v) {
        const auto u = static_cast<std::size_t>(v);
        if (!roi_.data()[u]) continue;
        const double denom = s_ff_[u] * s_ww_[u];
        if (!(denom > kTiny)) continue;
        const double coeff = 2.0 * s_fw_[u] / denom *
                             ((fixed_[u] - mean_f_[u]) - s_fw_[u] / s_ww_[u] * (warped_[u] - mean_w_[u]));
        if (coeff == 0.0) continue;
        out[u] = grad_map_ * (coeff * index_gradient(warped_.data(), d, grid_.index_of(v)));
      }
    });
  }

private:
  static constexpr double kTiny = 1e-12;
  Grid grid_;
  const Mask& roi_;
  int radius_;
  std::vector<double> fixed_, moving_, warped_;
  std::vector<double> count_, sum_f_, sum_ff_;
  std::vector<double> s_ff_, s_ww_, s_fw_, mean_f_, mean_w_;
  Mat3 grad_map_;
};

bool fits_level(const Grid& grid, const DeformableConfig& config) {
  const int need = config.similarity == DeformableSimilarity::SscSsd
                       ? 2 * (config.ssc.patch_radius + config.ssc.neighbor_step) + 1
                       : 2;
  for (std::size_t a = 0; a < 3; ++a)
    if (grid.dims()[a] < need) return false;
  return true;
}

}  // namespace

std::pair<DisplacementField, DeformableDiagnostics> register_deformable(const Volume& fixed,
                                                                        const Volume& moving,
                                                                        const Mask& roi,
                                                                        const DeformableConfig& config) {
  config.validate();
  if (!fixed.grid().matches(moving.grid()))
    fail(ErrorKind::Validation, "deformable stage: fixed and moving grids differ");
  if (!roi.grid().matches(fixed.grid())) fail(ErrorKind::Validation, "deformable stage: roi grid differs from fixed grid");
  if (roi.count() == 0) fail(ErrorKind::Validation, "deformable stage: empty roi");

  DeformableDiagnostics diag;
  std::unique_ptr<DisplacementField> previous;
  for (std::size_t l = 0; l < config.levels.size(); ++l) {
    const double spacing = config.levels[l];
    Grid level_grid = isotropic_grid(fixed.grid(), spacing);
    if (!fits_level(level_grid, config)) continue;
    const Volume fixed_level = resample_to_resolution(fixed, spacing);
    const Volume moving_level = resample_to_resolution(moving, spacing);
    const Mask roi_level = apply_affine(roi, AffineTransform::identity(), level_grid);
    DisplacementField field = previous ? resample_field(*previous, level_grid) : DisplacementField::zero(level_grid);
    zero_outside(field, roi_level);
    if (roi_level.count() == 0) {
      previous = std::make_unique<DisplacementField>(std::move(field));
      continue;
    }

    std::unique_ptr<Similarity> term;
    if (config.similarity == DeformableSimilarity::SscSsd) {
      term = std::make_unique<SscSsd>(fixed_level, moving_level, roi_level, config.ssc);
    } else {
      term = std::make_unique<LocalNcc>(fixed_level, moving_level, roi_level, config.ncc_radius);
    }

    const double sigma = 2.0 * config.smoothness;
    double objective = term->evaluate(field);
    diag.iterations.push_back({static_cast<int>(l), spacing, 0, objective, 0.0});
    std::vector<Vec3> direction;
    for (int it = 1; it <= config.iterations_per_level; ++it) {
      term->descent(direction);
      double largest = 0.0;
      for (const auto& g : direction) largest = std::max(largest, g.norm());
      if (!(largest > 0.0)) break;

      bool accepted = false;
      double alpha = 1.0;
      for (int attempt = 0; attempt <= kMaxBacktracks; ++attempt, alpha *= 0.5) {
        const double scale = alpha * config.step_size / largest;
        DisplacementField candidate = field;
        for (std::size_t v = 0; v < direction.size(); ++v) candidate.vectors()[v] += scale * direction[v];
        candidate = gaussian_smooth(candidate, sigma);
        zero_outside(candidate, roi_level);
        const double value = term->evaluate(candidate);
        if (value < objective) {
          field = std::move(candidate);
          objective = value;
          accepted = true;
          diag.iterations.push_back({static_cast<int>(l), spacing, it, objective, alpha * config.step_size});
          break;
        }
      }
      if (!accepted) {
        term->evaluate(field);
        break;
      }
    }
    previous = std::make_unique<DisplacementField>(std::move(field));
  }

  DisplacementField out = previous ? resample_field(*previous, fixed.grid()) : DisplacementField::zero(fixed.grid());
  zero_outside(out, roi);
  return {std::move(out), diag};
}

}  // namespace bmreg

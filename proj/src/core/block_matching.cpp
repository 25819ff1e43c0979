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
#include "block_matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace bmreg {

void BlockMatchParams::validate() const {
  if (block_size < 2) fail(ErrorKind::Validation, "block_size must be >= 2");
  if (!(active_fraction > 0.0 && active_fraction <= 1.0))
    fail(ErrorKind::Validation, "active_fraction must be in (0, 1]");
  if (search_radius < 1) fail(ErrorKind::Validation, "search_radius must be >= 1");
  if (search_stride < 1) fail(ErrorKind::Validation, "search_stride must be >= 1");
}

namespace {

struct Offset {
  int dx, dy, dz;
};

std::vector<Offset> search_offsets(int radius, int stride) {
  std::vector<Offset> out;
  const int steps = radius / stride;
  for (int a = -steps; a <= steps; ++a)
    for (int b = -steps; b <= steps; ++b)
      for (int c = -steps; c <= steps; ++c) out.push_back({a * stride, b * stride, c * stride});
  // Visiting in (|d|^2, lexicographic) order makes "first strict maximum"
  // implement the tie-break rule.
  std::stable_sort(out.begin(), out.end(), [](const Offset& l, const Offset& r) {
    const int nl = l.dx * l.dx + l.dy * l.dy + l.dz * l.dz;
    const int nr = r.dx * r.dx + r.dy * r.dy + r.dz * r.dz;
    if (nl != nr) return nl < nr;
    if (l.dx != r.dx) return l.dx < r.dx;
    if (l.dy != r.dy) return l.dy < r.dy;
    return l.dz < r.dz;
  });
  return out;
}

}  // namespace

std::vector<ActiveBlock> partition_and_select(const Volume& fixed, const BlockMatchParams& params) {
  params.validate();
  const Index3& d = fixed.grid().dims();
  const std::int64_t b = params.block_size;
  const Index3 nb{d[0] / b, d[1] / b, d[2] / b};
  if (nb[0] < 1 || nb[1] < 1 || nb[2] < 1) {
    fail(ErrorKind::Size, "volume smaller than one " + std::to_string(b) + "-voxel block");
  }
  const std::int64_t total = nb[0] * nb[1] * nb[2];
  std::vector<ActiveBlock> blocks(static_cast<std::size_t>(total));
  const double count = static_cast<double>(b * b * b);
  parallel_for(total, [&](std::int64_t q0, std::int64_t q1) {
    for (std::int64_t q = q0; q < q1; ++q) {
      const Index3 o{(q % nb[0]) * b, ((q / nb[0]) % nb[1]) * b, (q / (nb[0] * nb[1])) * b};
      double sum = 0.0;
      for (std::int64_t k = 0; k < b; ++k)
        for (std::int64_t j = 0; j < b; ++j)
          for (std::int64_t i = 0; i < b; ++i) sum += fixed.at(o[0] + i, o[1] + j, o[2] + k);
      const double mean = sum / count;
      double ss = 0.0;
      for (std::int64_t k = 0; k < b; ++k)
        for (std::int64_t j = 0; j < b; ++j)
          for (std::int64_t i = 0; i < b; ++i) {
            const double t = fixed.at(o[0] + i, o[1] + j, o[2] + k) - mean;
            ss += t * t;
          }
      blocks[static_cast<std::size_t>(q)] = {o, ss / count, ss == 0.0};
    }
  });
  std::vector<std::size_t> order(blocks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return blocks[l].variance > blocks[r].variance; });
  const std::size_t keep = std::max<std::size_t>(1, ceil_fraction(params.active_fraction, blocks.size()));
  std::vector<ActiveBlock> selected;
  selected.reserve(keep);
  for (std::size_t n = 0; n < keep; ++n) selected.push_back(blocks[order[n]]);
  return selected;
}

CorrespondenceSet match_blocks(const Volume& fixed, const Volume& moving,
                               std::span<const ActiveBlock> active, const BlockMatchParams& params) {
  params.validate();
  if (active.empty()) fail(ErrorKind::Validation, "no active blocks to match");
  if (!fixed.grid().matches(moving.grid()))
    fail(ErrorKind::Validation, "block matching requires fixed and moving on the same grid");
  const Grid& grid = fixed.grid();
  const Index3& d = grid.dims();
  const std::int64_t b = params.block_size;
  const std::int64_t bn = b * b * b;
  for (std::size_t a = 0; a < 3; ++a)
    if (d[a] < b) fail(ErrorKind::Size, "volume smaller than one block");

  // Mean and centered sum of squares of the moving block at every origin.
  const Index3 od{d[0] - b + 1, d[1] - b + 1, d[2] - b + 1};
  const std::int64_t on = od[0] * od[1] * od[2];
  std::vector<double> m_mean(static_cast<std::size_t>(on));
  std::vector<double> m_ss(static_cast<std::size_t>(on));
  const double* mv = moving.data().data();
  const std::int64_t sy = d[0], sz = d[0] * d[1];
  parallel_for(on, [&](std::int64_t q0, std::int64_t q1) {
    for (std::int64_t q = q0; q < q1; ++q) {
      const std::int64_t i = q % od[0], j = (q / od[0]) % od[1], k = q / (od[0] * od[1]);
      const double* base = mv + i + sy * j + sz * k;
      double sum = 0.0;
      for (std::int64_t z = 0; z < b; ++z)
        for (std::int64_t y = 0; y < b; ++y)
          for (std::int64_t x = 0; x < b; ++x) sum += base[x + sy * y + sz * z];
      const double mean = sum / static_cast<double>(bn);
      double ss = 0.0;
      for (std::int64_t z = 0; z < b; ++z)
        for (std::int64_t y = 0; y < b; ++y)
          for (std::int64_t x = 0; x < b; ++x) {
            const double t = base[x + sy * y + sz * z] - mean;
            ss += t * t;
          }
      m_mean[static_cast<std::size_t>(q)] = mean;
      m_ss[static_cast<std::size_t>(q)] = ss;
    }
  });

  const std::vector<Offset> offsets = search_offsets(params.search_radius, params.search_stride);
  const Vec3 half = Vec3::Constant(0.5 * static_cast<double>(b - 1));

  struct Result {
    bool valid = false;
    Correspondence pair;
  };
  std::vector<Result> results(active.size());
  parallel_for(static_cast<std::int64_t>(active.size()), [&](std::int64_t a0, std::int64_t a1) {
    std::vector<double> centered(static_cast<std::size_t>(bn));
    for (std::int64_t a = a0; a < a1; ++a) {
      const ActiveBlock& blk = active[static_cast<std::size_t>(a)];
      const Index3& o = blk.origin;
      if (blk.zero_variance) continue;
      if (o[0] < 0 || o[1] < 0 || o[2] < 0 || o[0] + b > d[0] || o[1] + b > d[1] || o[2] + b > d[2])
        fail(ErrorKind::Validation, "active block outside the fixed volume");
      double sum = 0.0;
      std::size_t t = 0;
      for (std::int64_t z = 0; z < b; ++z)
        for (std::int64_t y = 0; y < b; ++y)
          for (std::int64_t x = 0; x < b; ++x) {
            centered[t] = fixed.at(o[0] + x, o[1] + y, o[2] + z);
            sum += centered[t++];
          }
      const double mean = sum / static_cast<double>(bn);
      double ff = 0.0;
      for (auto& c : centered) {
        c -= mean;
        ff += c * c;
      }
      if (ff == 0.0) continue;

      double best = -1.0;
      Offset best_off{0, 0, 0};
      for (const Offset& off : offsets) {
        const std::int64_t mi = o[0] + off.dx, mj = o[1] + off.dy, mk = o[2] + off.dz;
        if (mi < 0 || mj < 0 || mk < 0 || mi >= od[0] || mj >= od[1] || mk >= od[2]) continue;
        const std::int64_t q = mi + od[0] * (mj + od[1] * mk);
        const double mm = m_ss[static_cast<std::size_t>(q)];
        if (mm == 0.0) continue;
        const double* base = mv + mi + sy * mj + sz * mk;
        double cross = 0.0;
        std::size_t u = 0;
        for (std::int64_t z = 0; z < b; ++z)
          for (std::int64_t y = 0; y < b; ++y) {
            const double* row = base + sy * y + sz * z;
            for (std::int64_t x = 0; x < b; ++x) cross += centered[u++] * row[x];
          }
        const double score = std::min(1.0, std::abs(cross) / std::sqrt(ff * mm));
        if (score > best) {
          best = score;
          best_off = off;
        }
      }
      if (best < 0.0) continue;
      Result& res = results[static_cast<std::size_t>(a)];
      res.valid = true;
      const Vec3 fc = Vec3(static_cast<double>(o[0]), static_cast<double>(o[1]), static_cast<double>(o[2])) + half;
      res.pair.fixed_point = grid.world_from_voxel(fc);
      res.pair.moving_point = grid.world_from_voxel(fc + Vec3(best_off.dx, best_off.dy, best_off.dz));
      res.pair.score = best;
    }
  });

  CorrespondenceSet out;
  out.source_level_mm = grid.spacing().minCoeff();
  for (const auto& r : results)
    if (r.valid) out.pairs.push_back(r.pair);
  return out;
}

}  // namespace bmreg

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
#include "ssc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bmreg {

void SscParams::validate() const {
  if (patch_radius < 0) fail(ErrorKind::Validation, "SSC patch_radius must be >= 0");
  if (neighbor_step < 1) fail(ErrorKind::Validation, "SSC neighbor_step must be >= 1");
  if (!(epsilon > 0.0)) fail(ErrorKind::Validation, "SSC epsilon must be > 0");
}

std::array<std::array<int, 3>, 6> ssc_neighbor_offsets(int step) {
  return {{{step, 0, 0}, {-step, 0, 0}, {0, step, 0}, {0, -step, 0}, {0, 0, step}, {0, 0, -step}}};
}

std::array<std::pair<int, int>, kSscChannels> ssc_neighbor_pairs() {
  std::array<std::pair<int, int>, kSscChannels> pairs{};
  std::size_t n = 0;
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j)
      if (i / 2 != j / 2) pairs[n++] = {i, j};
  return pairs;
}

SscDescriptor::SscDescriptor(Grid grid, std::vector<double> channels, std::vector<std::uint8_t> degenerate)
    : grid_(std::move(grid)), channels_(std::move(channels)), degenerate_(std::move(degenerate)) {
  const auto n = static_cast<std::size_t>(grid_.voxel_count());
  if (channels_.size() != n * kSscChannels) fail(ErrorKind::Validation, "SSC descriptor must have 12 channels per voxel");
  if (degenerate_.empty()) degenerate_.assign(n, 0);
  if (degenerate_.size() != n) fail(ErrorKind::Validation, "SSC degenerate flags do not match the grid");
}

SscDescriptor compute_ssc(const Volume& volume, const SscParams& params) {
  params.validate();
  const Index3& d = volume.grid().dims();
  const int r = params.patch_radius;
  const int s = params.neighbor_step;
  for (std::size_t a = 0; a < 3; ++a) {
    if (d[a] < 2 * (r + s) + 1) {
      fail(ErrorKind::Size, "volume too small for SSC: axis " + std::to_string(a) + " has " +
                                std::to_string(d[a]) + " voxels, needs " + std::to_string(2 * (r + s) + 1));
    }
  }
  const std::int64_t n = volume.grid().voxel_count();
  const double* img = volume.data().data();

  const double mean = ordered_sum(n, [&](std::int64_t b, std::int64_t e) {
                        double acc = 0.0;
                        for (std::int64_t v = b; v < e; ++v) acc += img[v];
                        return acc;
                      }) / static_cast<double>(n);
  const double variance = ordered_sum(n, [&](std::int64_t b, std::int64_t e) {
                            double acc = 0.0;
                            for (std::int64_t v = b; v < e; ++v) acc += (img[v] - mean) * (img[v] - mean);
                            return acc;
                          }) / static_cast<double>(n);
  const double floor_v = params.epsilon * (variance + params.epsilon);

  // Squared differences on a grid padded by r so that box sums see the same
  // clamped samples as a direct patch loop.
  const Index3 pd{d[0] + 2 * r, d[1] + 2 * r, d[2] + 2 * r};
  const std::int64_t pn = pd[0] * pd[1] * pd[2];
  const auto offsets = ssc_neighbor_offsets(s);
  const auto pairs = ssc_neighbor_pairs();
  const double patch_count = std::pow(2.0 * r + 1.0, 3.0);
  auto at_clamped = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
    i = std::clamp<std::int64_t>(i, 0, d[0] - 1);
    j = std::clamp<std::int64_t>(j, 0, d[1] - 1);
    k = std::clamp<std::int64_t>(k, 0, d[2] - 1);
    return img[i + d[0] * (j + d[1] * k)];
  };

  std::vector<double> channels(static_cast<std::size_t>(n * kSscChannels));
  std::vector<double> sq(static_cast<std::size_t>(pn));
  std::vector<double> sx(static_cast<std::size_t>(d[0] * pd[1] * pd[2]));
  std::vector<double> sy(static_cast<std::size_t>(d[0] * d[1] * pd[2]));

  for (int c = 0; c < kSscChannels; ++c) {
    const auto& oi = offsets[static_cast<std::size_t>(pairs[static_cast<std::size_t>(c)].first)];
    const auto& oj = offsets[static_cast<std::size_t>(pairs[static_cast<std::size_t>(c)].second)];
    parallel_for(pd[1] * pd[2], [&](std::int64_t r0, std::int64_t r1) {
      for (std::int64_t row = r0; row < r1; ++row) {
        const std::int64_t y = row % pd[1] - r;
        const std::int64_t z = row / pd[1] - r;
        for (std::int64_t x = -r; x < d[0] + r; ++x) {
          const double diff = at_clamped(x + oi[0], y + oi[1], z + oi[2]) - at_clamped(x + oj[0], y + oj[1], z + oj[2]);
          sq[static_cast<std::size_t>((x + r) + pd[0] * row)] = diff * diff;
        }
      }
    });
    // Box sums along x, then y, then z.
    parallel_for(pd[1] * pd[2], [&](std::int64_t r0, std::int64_t r1) {
      for (std::int64_t row = r0; row < r1; ++row)
        for (std::int64_t x = 0; x < d[0]; ++x) {
          double acc = 0.0;
          for (int t = 0; t <= 2 * r; ++t) acc += sq[static_cast<std::size_t>(x + t + pd[0] * row)];
          sx[static_cast<std::size_t>(x + d[0] * row)] = acc;
        }
    });
    parallel_for(pd[2], [&](std::int64_t z0, std::int64_t z1) {
      for (std::int64_t z = z0; z < z1; ++z)
        for (std::int64_t y = 0; y < d[1]; ++y)
          for (std::int64_t x = 0; x < d[0]; ++x) {
            double acc = 0.0;
            for (int t = 0; t <= 2 * r; ++t) acc += sx[static_cast<std::size_t>(x + d[0] * ((y + t) + pd[1] * z))];
            sy[static_cast<std::size_t>(x + d[0] * (y + d[1] * z))] = acc;
          }
    });
    double* out = channels.data() + static_cast<std::int64_t>(c) * n;
    parallel_for(d[2], [&](std::int64_t z0, std::int64_t z1) {
      for (std::int64_t z = z0; z < z1; ++z)
        for (std::int64_t y = 0; y < d[1]; ++y)
          for (std::int64_t x = 0; x < d[0]; ++x) {
            double acc = 0.0;
            for (int t = 0; t <= 2 * r; ++t) acc += sy[static_cast<std::size_t>(x + d[0] * (y + d[1] * (z + t)))];
            out[x + d[0] * (y + d[1] * z)] = acc / patch_count;
          }
    });
  }

  std::vector<std::uint8_t> degenerate(static_cast<std::size_t>(n), 0);
  parallel_for(n, [&](std::int64_t v0, std::int64_t v1) {
    for (std::int64_t v = v0; v < v1; ++v) {
      double total = 0.0;
      for (int c = 0; c < kSscChannels; ++c) total += channels[static_cast<std::size_t>(c * n + v)];
      const double mean_d = total / kSscChannels;
      if (mean_d < floor_v) {
        degenerate[static_cast<std::size_t>(v)] = 1;
        for (int c = 0; c < kSscChannels; ++c) channels[static_cast<std::size_t>(c * n + v)] = 1.0;
        continue;
      }
      double largest = 0.0;
      for (int c = 0; c < kSscChannels; ++c) {
        double& ch = channels[static_cast<std::size_t>(c * n + v)];
        ch = std::exp(-ch / mean_d);
        largest = std::max(largest, ch);
      }
      for (int c = 0; c < kSscChannels; ++c) channels[static_cast<std::size_t>(c * n + v)] /= largest;
    }
  });
  return SscDescriptor(volume.grid(), std::move(channels), std::move(degenerate));
}

double ssc_mse(const SscDescriptor& fixed, const SscDescriptor& moving, const Mask* mask) {
  if (!fixed.grid().matches(moving.grid()))
    fail(ErrorKind::Validation, "SSC descriptors are on different grids");
  if (mask != nullptr && !mask->grid().matches(fixed.grid()))
    fail(ErrorKind::Validation, "mask grid does not match descriptor grid");
  const std::int64_t n = fixed.voxel_count();
  auto counted = [&](std::int64_t v) {
    if (mask != nullptr && !mask->data()[static_cast<std::size_t>(v)]) return false;
    return !fixed.degenerate(v) && !moving.degenerate(v);
  };
  const double count = ordered_sum(n, [&](std::int64_t b, std::int64_t e) {
    double acc = 0.0;
    for (std::int64_t v = b; v < e; ++v) acc += counted(v) ? 1.0 : 0.0;
    return acc;
  });
  if (count == 0.0) fail(ErrorKind::Validation, "SSC-MSE has no countable voxels");
  const double total = ordered_sum(n, [&](std::int64_t b, std::int64_t e) {
    double acc = 0.0;
    for (std::int64_t v = b; v < e; ++v) {
      if (!counted(v)) continue;
      for (int c = 0; c < kSscChannels; ++c) {
        const double diff = fixed.channel(c, v) - moving.channel(c, v);
        acc += diff * diff;
      }
    }
    return acc;
  });
  return total / (count * kSscChannels);
}

double ssc_mse(const Volume& fixed, const Volume& moving, const Mask* mask, const SscParams& params) {
  if (!fixed.grid().matches(moving.grid())) fail(ErrorKind::Validation, "volumes are on different grids");
  return ssc_mse(compute_ssc(fixed, params), compute_ssc(moving, params), mask);
}

}  // namespace bmreg

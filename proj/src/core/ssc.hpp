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
#pragma once

// Self-similarity context descriptor and the SSC-MSE similarity score.
//
// For each voxel x the descriptor compares patches centered at pairs of
// six-neighborhood offsets {+-s*e1, +-s*e2, +-s*e3} that are sqrt(2)*s
// apart (12 pairs). Patch distance D_k is the mean squared difference over
// aligned (2r+1)^3 patches with edge-clamped sampling. With V the mean of
// the 12 distances, clamped below by epsilon * (global variance + epsilon),
// channel k is exp(-D_k / V), divided by the voxel's largest channel.
// Voxels whose V was clamped are degenerate: all channels are 1 and the
// voxel is excluded from SSC-MSE.

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "geometry.hpp"

namespace bmreg {

constexpr int kSscChannels = 12;

struct SscParams {
  int patch_radius = 1;
  int neighbor_step = 1;
  double epsilon = 1e-6;

  void validate() const;
};

// Neighbor offsets in channel order: +x, -x, +y, -y, +z, -z.
std::array<std::array<int, 3>, 6> ssc_neighbor_offsets(int step);
// The 12 (i, j) neighbor pairs, i < j on different axes, lexicographic.
std::array<std::pair<int, int>, kSscChannels> ssc_neighbor_pairs();

class SscDescriptor {
public:
  // channels is channel-major: channels[k * voxel_count + v].
  SscDescriptor(Grid grid, std::vector<double> channels, std::vector<std::uint8_t> degenerate);

  const Grid& grid() const noexcept { return grid_; }
  std::int64_t voxel_count() const noexcept { return grid_.voxel_count(); }
  double channel(int k, std::int64_t voxel) const {
    return channels_[static_cast<std::size_t>(k * grid_.voxel_count() + voxel)];
  }
  std::span<const double> channel_data(int k) const {
    return std::span<const double>(channels_).subspan(static_cast<std::size_t>(k * grid_.voxel_count()),
                                                      static_cast<std::size_t>(grid_.voxel_count()));
  }
  const std::vector<double>& channels() const noexcept { return channels_; }
  bool degenerate(std::int64_t voxel) const { return degenerate_[static_cast<std::size_t>(voxel)] != 0; }
  const std::vector<std::uint8_t>& degenerate_flags() const noexcept { return degenerate_; }

private:
  Grid grid_;
  std::vector<double> channels_;
  std::vector<std::uint8_t> degenerate_;
};

// Throws ErrorKind::Size when an axis is shorter than
// 2 * (patch_radius + neighbor_step) + 1.
SscDescriptor compute_ssc(const Volume& volume, const SscParams& params = {});

// Mean over in-mask voxels not flagged degenerate in either descriptor and
// over all 12 channels of the squared channel difference.
double ssc_mse(const SscDescriptor& fixed, const SscDescriptor& moving, const Mask* mask = nullptr);

// Convenience: descriptors of both volumes (which must share a grid), then
// ssc_mse.
double ssc_mse(const Volume& fixed, const Volume& moving, const Mask* mask, const SscParams& params);

}  // namespace bmreg

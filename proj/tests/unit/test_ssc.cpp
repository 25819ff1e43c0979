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

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "phantoms.hpp"
#include "ssc.hpp"

using namespace bmreg;

namespace {

Volume random_volume(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<double> data(static_cast<std::size_t>(g.voxel_count()));
  for (double& x : data) x = u(rng);
  return Volume(g, std::move(data));
}

SscDescriptor random_descriptor(const Grid& g, std::mt19937_64& rng, double degenerate_rate) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> ch(static_cast<std::size_t>(g.voxel_count() * kSscChannels));
  for (double& x : ch) x = u(rng);
  std::vector<std::uint8_t> deg(static_cast<std::size_t>(g.voxel_count()));
  for (auto& d : deg) d = u(rng) < degenerate_rate;
  return SscDescriptor(g, std::move(ch), std::move(deg));
}

}  // namespace

TEST_CASE("neighbor pairs are the 12 off-axis pairs at sqrt(2) step") {
  const auto offsets = ssc_neighbor_offsets(2);
  const auto pairs = ssc_neighbor_pairs();
  for (const auto& [i, j] : pairs) {
    CHECK(i < j);
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double d = offsets[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] -
                       offsets[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)];
      d2 += d * d;
    }
    CHECK(d2 == doctest::Approx(8.0));
  }
}

TEST_CASE("compute_ssc matches the brute-force oracle") {
  const Grid g = Grid::from_spacing({9, 9, 9}, Vec3(1, 1, 1));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Volume v = random_volume(g, seed);
    for (const SscParams p : {SscParams{}, SscParams{2, 1, 1e-6}, SscParams{1, 2, 1e-6}, SscParams{0, 1, 1e-6}}) {
      const SscDescriptor d = compute_ssc(v, p);
      const testing::SscOracle o = testing::brute_force_ssc(v, p);
      double worst = 0.0;
      for (std::size_t i = 0; i < o.channels.size(); ++i) worst = std::max(worst, std::abs(d.channels()[i] - o.channels[i]));
      CHECK(worst <= 1e-12);
      CHECK(d.degenerate_flags() == o.degenerate);
    }
  }
}

TEST_CASE("constant volume is degenerate everywhere") {
  const Volume c(Grid::from_spacing({5, 5, 5}, Vec3(1, 1, 1)), 42.0);
  const SscDescriptor d = compute_ssc(c);
  for (std::int64_t v = 0; v < d.voxel_count(); ++v) {
    CHECK(d.degenerate(v));
    for (int k = 0; k < kSscChannels; ++k) CHECK(d.channel(k, v) == 1.0);
  }
  CHECK_THROWS_AS(ssc_mse(d, d), Error);
}

TEST_CASE("channels lie in [0,1] with unit maximum") {
  const Volume v = testing::smooth_noise(Grid::from_spacing({12, 11, 10}, Vec3(1, 1, 1)), {1.0}, 3);
  const SscDescriptor d = compute_ssc(v);
  for (std::int64_t x = 0; x < d.voxel_count(); ++x) {
    double largest = 0.0;
    for (int k = 0; k < kSscChannels; ++k) {
      CHECK(d.channel(k, x) >= 0.0);
      CHECK(d.channel(k, x) <= 1.0);
      largest = std::max(largest, d.channel(k, x));
    }
    if (!d.degenerate(x)) CHECK(largest == 1.0);
  }
}

TEST_CASE("descriptor is invariant under affine intensity maps") {
  const Grid g = Grid::from_spacing({9, 9, 9}, Vec3(1, 1, 1));
  const Volume v = random_volume(g, 4);
  std::vector<double> mapped(v.data().begin(), v.data().end());
  for (double& x : mapped) x = 3.0 * x + 10.0;
  const SscDescriptor a = compute_ssc(v);
  const SscDescriptor b = compute_ssc(Volume(g, mapped));
  for (std::int64_t x = 0; x < a.voxel_count(); ++x) {
    if (a.degenerate(x)) continue;
    for (int k = 0; k < kSscChannels; ++k) CHECK(std::abs(a.channel(k, x) - b.channel(k, x)) <= 1e-9);
  }
  std::vector<double> negated(v.data().begin(), v.data().end());
  for (double& x : negated) x = -0.5 * x;
  const SscDescriptor c = compute_ssc(Volume(g, negated));
  for (std::int64_t x = 0; x < a.voxel_count(); ++x)
    for (int k = 0; k < kSscChannels; ++k) CHECK(std::abs(a.channel(k, x) - c.channel(k, x)) <= 1e-9);
}

TEST_CASE("descriptor is translation equivariant on the interior") {
  const Grid g = Grid::from_spacing({16, 16, 16}, Vec3(1, 1, 1));
  const Volume v = random_volume(g, 5);
  const Index3 shift{2, 1, 3};
  Volume moved(g);
  for (std::int64_t k = 0; k < 16; ++k)
    for (std::int64_t j = 0; j < 16; ++j)
      for (std::int64_t i = 0; i < 16; ++i)
        moved.at(i, j, k) = v.at(std::clamp<std::int64_t>(i - shift[0], 0, 15), std::clamp<std::int64_t>(j - shift[1], 0, 15),
                                 std::clamp<std::int64_t>(k - shift[2], 0, 15));
  const SscDescriptor a = compute_ssc(v);
  const SscDescriptor b = compute_ssc(moved);
  const int m = 2;  // patch_radius + neighbor_step
  for (std::int64_t k = m; k < 16 - m - shift[2]; ++k)
    for (std::int64_t j = m; j < 16 - m - shift[1]; ++j)
      for (std::int64_t i = m; i < 16 - m - shift[0]; ++i)
        for (int c = 0; c < kSscChannels; ++c)
          CHECK(std::abs(a.channel(c, g.linear_index(i, j, k)) -
                         b.channel(c, g.linear_index(i + shift[0], j + shift[1], k + shift[2]))) <= 1e-12);
}

TEST_CASE("compute_ssc preconditions") {
  const Volume small(Grid::from_spacing({4, 9, 9}, Vec3(1, 1, 1)), 1.0);
  try {
    compute_ssc(small);
    FAIL("expected a size error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Size);
  }
  const Volume v(Grid::from_spacing({9, 9, 9}, Vec3(1, 1, 1)), 1.0);
  CHECK_THROWS_AS(compute_ssc(v, SscParams{-1, 1, 1e-6}), Error);
  CHECK_THROWS_AS(compute_ssc(v, SscParams{1, 0, 1e-6}), Error);
  CHECK_THROWS_AS(compute_ssc(v, SscParams{1, 1, 0.0}), Error);
}

TEST_CASE("ssc_mse examples") {
  const Grid g = Grid::from_spacing({5, 5, 5}, Vec3(1, 1, 1));
  std::mt19937_64 rng(6);
  const SscDescriptor a = random_descriptor(g, rng, 0.0);
  CHECK(ssc_mse(a, a) == 0.0);

  const auto n = static_cast<std::size_t>(g.voxel_count() * kSscChannels);
  const SscDescriptor ones(g, std::vector<double>(n, 1.0), {});
  const SscDescriptor zeros(g, std::vector<double>(n, 0.0), {});
  CHECK(ssc_mse(ones, zeros) == 1.0);

  const SscDescriptor b = random_descriptor(g, rng, 0.2);
  const SscDescriptor c = random_descriptor(g, rng, 0.2);
  Mask mask(g);
  for (std::size_t i = 0; i < mask.data().size(); ++i) mask.data()[i] = (i % 3) != 0;
  double sum = 0.0;
  double count = 0.0;
  for (std::int64_t v = 0; v < g.voxel_count(); ++v) {
    if (!mask.data()[static_cast<std::size_t>(v)] || b.degenerate(v) || c.degenerate(v)) continue;
    count += 1.0;
    for (int k = 0; k < kSscChannels; ++k) sum += (b.channel(k, v) - c.channel(k, v)) * (b.channel(k, v) - c.channel(k, v));
  }
  CHECK(std::abs(ssc_mse(b, c, &mask) - sum / (count * kSscChannels)) <= 1e-12);
  CHECK(ssc_mse(b, c) == ssc_mse(c, b));
  CHECK(ssc_mse(b, c, &mask) == ssc_mse(c, b, &mask));
}

TEST_CASE("ssc_mse errors") {
  std::mt19937_64 rng(7);
  const SscDescriptor a = random_descriptor(Grid::from_spacing({5, 5, 5}, Vec3(1, 1, 1)), rng, 0.0);
  const SscDescriptor b = random_descriptor(Grid::from_spacing({5, 5, 5}, Vec3(2, 1, 1)), rng, 0.0);
  CHECK_THROWS_AS(ssc_mse(a, b), Error);
  const Mask empty(a.grid(), false);
  CHECK_THROWS_AS(ssc_mse(a, a, &empty), Error);
  CHECK_THROWS_AS(SscDescriptor(a.grid(), std::vector<double>(5), {}), Error);
}

TEST_CASE("volume ssc_mse of a volume against itself is exactly zero") {
  const Volume v = testing::smooth_noise(Grid::from_spacing({10, 10, 10}, Vec3(1, 1, 1)), {1.0}, 8);
  CHECK(ssc_mse(v, v, nullptr, SscParams{}) == 0.0);
}

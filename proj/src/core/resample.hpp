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

// Interpolation, resolution pyramids, warping and cropping.

#include "field.hpp"
#include "geometry.hpp"

namespace bmreg {

enum class Interpolation { Nearest, Trilinear };

enum class Boundary {
  Clamp,  // replicate edge values
  Zero,   // values outside the grid are zero
};

// Trilinear sample at a continuous voxel index. Indices outside
// [0, dims-1] (1e-6 slack) return background.
double sample_trilinear(const Volume& volume, const Vec3& index, double background);
// Trilinear sample with indices clamped into the grid.
double sample_trilinear_clamped(const Volume& volume, const Vec3& index);
double sample_nearest(const Volume& volume, const Vec3& index, double background);

// Separable Gaussian; sigma per axis in voxels, truncated at 3 sigma.
Volume gaussian_smooth(const Volume& volume, const Vec3& sigma_voxels,
                       Boundary boundary = Boundary::Clamp);
// Smooths each component of the field with zero padding outside the grid.
DisplacementField gaussian_smooth(const DisplacementField& field, double sigma_voxels);

// Isotropic grid at iso_spacing_mm over the same world box, keeping the axis
// directions. Dims are floor(extent / spacing) and the grid is centered in
// the original extent.
Grid isotropic_grid(const Grid& grid, double iso_spacing_mm);

// Anti-aliased (sigma 0.42 * ratio voxels when downsampling) trilinear
// resampling with clamped edges.
Volume resample_to_resolution(const Volume& volume, double iso_spacing_mm);

// Output voxel x takes moving(transform(world(x))).
Volume apply_affine(const Volume& moving, const AffineTransform& transform, const Grid& target,
                    Interpolation interp = Interpolation::Trilinear, double background = 0.0);
Mask apply_affine(const Mask& moving, const AffineTransform& transform, const Grid& target);

// Output voxel v (on field.grid()) takes moving(world(v) + field(v)).
Volume apply_field(const Volume& moving, const DisplacementField& field,
                   Interpolation interp = Interpolation::Trilinear, double background = 0.0);

// f' with world(v) + f'(v) = a(world(v) + f(v)).
DisplacementField compose_affine_then_field(const AffineTransform& a, const DisplacementField& field);

// Trilinear, clamped resampling of a field onto another grid.
DisplacementField resample_field(const DisplacementField& field, const Grid& target);

// Sample a field at a world point. Returns false outside the grid.
bool sample_field(const DisplacementField& field, const Vec3& world, Vec3& out);

struct CropBox {
  Index3 lo;
  Index3 size;
};

// Bounding box of true voxels dilated by margin and clamped to the grid.
CropBox mask_bounding_box(const Mask& mask, std::int64_t margin_voxels);
Grid crop_grid(const Grid& grid, const CropBox& box);
Volume crop(const Volume& volume, const CropBox& box);
Mask crop(const Mask& mask, const CropBox& box);
// Places a field defined on a crop into a zero field on the full grid.
DisplacementField embed_field(const DisplacementField& cropped, const Grid& full, const CropBox& box);

Volume crop_to_mask(const Volume& volume, const Mask& mask, std::int64_t margin_voxels);

// Determinant of the Jacobian of x -> x + f(x), central differences in the
// interior and one-sided differences on the boundary.
Volume jacobian_determinants(const DisplacementField& field);

// Copy of the field with every vector outside the mask set to zero.
void zero_outside(DisplacementField& field, const Mask& mask);

}  // namespace bmreg

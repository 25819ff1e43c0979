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

// NIfTI-1 volumes, masks and displacement fields, plus the plain-text
// landmark table and affine matrix formats.
//
// Landmark table: one landmark per line, "label, x, y, z" (or "x, y, z"
// when unlabeled), world millimeters, comma separated. Blank lines and
// lines starting with '#' are ignored.
//
// Affine text: four lines of four whitespace-separated numbers, the 4x4
// world-to-world matrix in row-major order.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "field.hpp"
#include "geometry.hpp"

namespace bmreg {

struct Nifti1Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1;
  float intent_p2;
  float intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max;
  float cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax;
  std::int32_t glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code;
  std::int16_t sform_code;
  float quatern_b;
  float quatern_c;
  float quatern_d;
  float qoffset_x;
  float qoffset_y;
  float qoffset_z;
  float srow_x[4];
  float srow_y[4];
  float srow_z[4];
  char intent_name[16];
  char magic[4];
};
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

namespace nifti_code {
constexpr std::int16_t kUInt8 = 2;
constexpr std::int16_t kInt16 = 4;
constexpr std::int16_t kInt32 = 8;
constexpr std::int16_t kFloat32 = 16;
constexpr std::int16_t kFloat64 = 64;
constexpr std::int16_t kIntentVector = 1007;
}  // namespace nifti_code

struct NiftiImage {
  Nifti1Header header{};
  std::array<std::int64_t, 7> dims{};  // dim[1..7], unused axes are 1
  Mat4 voxel_to_world = Mat4::Identity();
  std::vector<double> values;          // scaled, first axis fastest
};

// Decodes a header (and the data section for single-file images). For
// header/image pairs pass the image file bytes separately. Never crashes on
// arbitrary input; failures are ErrorKind::Parse naming the field.
NiftiImage decode_nifti(std::span<const std::uint8_t> header_bytes,
                        std::optional<std::span<const std::uint8_t>> image_bytes = std::nullopt);

// Reads .nii, .nii.gz or .hdr/.img pairs.
NiftiImage read_nifti(const std::string& path);

Volume read_volume(const std::string& path);
void write_volume(const Volume& volume, const std::string& path);

Mask read_mask(const std::string& path);
void write_mask(const Mask& mask, const std::string& path);

// Fields are 5-D (x, y, z, 1, 3) float32 with the vector intent.
DisplacementField read_field(const std::string& path);
void write_field(const DisplacementField& field, const std::string& path);

// Writes a 4-D float32 image with channels laid out channel-major.
void write_channels(const Grid& grid, std::span<const double> channel_major, int channels,
                    const std::string& path);

LandmarkSet parse_landmarks(const std::string& text);
std::string format_landmarks(const LandmarkSet& set);
LandmarkSet read_landmarks(const std::string& path);
void write_landmarks(const LandmarkSet& set, const std::string& path);

AffineTransform parse_affine(const std::string& text);
std::string format_affine(const AffineTransform& transform);
AffineTransform read_affine(const std::string& path);
void write_affine(const AffineTransform& transform, const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace bmreg

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
#include "nifti_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <zlib.h>

namespace bmreg {

static_assert(std::endian::native == std::endian::little,
              "writer assumes a little-endian host");

namespace {

template <class T>
void swap_bytes(T& value) {
  auto* p = reinterpret_cast<unsigned char*>(&value);
  std::reverse(p, p + sizeof(T));
}

template <class T, std::size_t N>
void swap_array(T (&values)[N]) {
  for (auto& v : values) swap_bytes(v);
}

void swap_header(Nifti1Header& h) {
  swap_bytes(h.sizeof_hdr);
  swap_bytes(h.extents);
  swap_bytes(h.session_error);
  swap_array(h.dim);
  swap_bytes(h.intent_p1);
  swap_bytes(h.intent_p2);
  swap_bytes(h.intent_p3);
  swap_bytes(h.intent_code);
  swap_bytes(h.datatype);
  swap_bytes(h.bitpix);
  swap_bytes(h.slice_start);
  swap_array(h.pixdim);
  swap_bytes(h.vox_offset);
  swap_bytes(h.scl_slope);
  swap_bytes(h.scl_inter);
  swap_bytes(h.slice_end);
  swap_bytes(h.cal_max);
  swap_bytes(h.cal_min);
  swap_bytes(h.slice_duration);
  swap_bytes(h.toffset);
  swap_bytes(h.glmax);
  swap_bytes(h.glmin);
  swap_bytes(h.qform_code);
  swap_bytes(h.sform_code);
  swap_bytes(h.quatern_b);
  swap_bytes(h.quatern_c);
  swap_bytes(h.quatern_d);
  swap_bytes(h.qoffset_x);
  swap_bytes(h.qoffset_y);
  swap_bytes(h.qoffset_z);
  swap_array(h.srow_x);
  swap_array(h.srow_y);
  swap_array(h.srow_z);
}

std::size_t datatype_size(std::int16_t code) {
  switch (code) {
    case nifti_code::kUInt8: return 1;
    case nifti_code::kInt16: return 2;
    case nifti_code::kInt32: return 4;
    case nifti_code::kFloat32: return 4;
    case nifti_code::kFloat64: return 8;
    default: return 0;
  }
}

template <class T>
double load_element(const std::uint8_t* p, bool swapped) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  if (swapped) swap_bytes(value);
  return static_cast<double>(value);
}

double positive_or_one(float p) {
  if (!std::isfinite(p) || p == 0.0f) return 1.0;
  return std::abs(static_cast<double>(p));
}

bool invertible(const Mat4& m) {
  if (!m.allFinite()) return false;
  const double det = m.topLeftCorner<3, 3>().determinant();
  return std::isfinite(det) && det != 0.0;
}

Mat4 quaternion_geometry(const Nifti1Header& h) {
  double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
  double a = 1.0 - (b * b + c * c + d * d);
  if (a < 1e-7) {
    a = 1.0 / std::sqrt(b * b + c * c + d * d);
    b *= a;
    c *= a;
    d *= a;
    a = 0.0;
  } else {
    a = std::sqrt(a);
  }
  const double dx = positive_or_one(h.pixdim[1]);
  const double dy = positive_or_one(h.pixdim[2]);
  double dz = positive_or_one(h.pixdim[3]);
  if (h.pixdim[0] < 0.0f) dz = -dz;

  Mat4 m = Mat4::Identity();
  m(0, 0) = (a * a + b * b - c * c - d * d) * dx;
  m(0, 1) = 2.0 * (b * c - a * d) * dy;
  m(0, 2) = 2.0 * (b * d + a * c) * dz;
  m(1, 0) = 2.0 * (b * c + a * d) * dx;
  m(1, 1) = (a * a + c * c - b * b - d * d) * dy;
  m(1, 2) = 2.0 * (c * d - a * b) * dz;
  m(2, 0) = 2.0 * (b * d - a * c) * dx;
  m(2, 1) = 2.0 * (c * d + a * b) * dy;
  m(2, 2) = (a * a + d * d - c * c - b * b) * dz;
  m(0, 3) = h.qoffset_x;
  m(1, 3) = h.qoffset_y;
  m(2, 3) = h.qoffset_z;
  return m;
}

Mat4 header_geometry(const Nifti1Header& h) {
  if (h.sform_code > 0) {
    Mat4 m = Mat4::Identity();
    for (int c = 0; c < 4; ++c) {
      m(0, c) = h.srow_x[c];
      m(1, c) = h.srow_y[c];
      m(2, c) = h.srow_z[c];
    }
    if (!invertible(m)) fail(ErrorKind::Parse, "singular geometry in sform (srow_x/srow_y/srow_z)");
    return m;
  }
  if (h.qform_code > 0) {
    const Mat4 m = quaternion_geometry(h);
    if (!invertible(m)) fail(ErrorKind::Parse, "singular geometry in qform (quatern/pixdim)");
    return m;
  }
  log_warning("NIfTI header has neither sform nor qform; using pixdim spacing with zero origin");
  Mat4 m = Mat4::Identity();
  m(0, 0) = positive_or_one(h.pixdim[1]);
  m(1, 1) = positive_or_one(h.pixdim[2]);
  m(2, 2) = positive_or_one(h.pixdim[3]);
  return m;
}

// Standard NIfTI-1 matrix-to-quaternion conversion for the qform fields.
void set_quaternion(Nifti1Header& h, const Mat4& m) {
  Mat3 lin = m.topLeftCorner<3, 3>();
  for (int c = 0; c < 3; ++c) {
    const double n = lin.col(c).norm();
    if (n > 0.0) lin.col(c) /= n;
  }
  Eigen::JacobiSVD<Mat3> svd(lin, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  double qfac = 1.0;
  if (r.determinant() < 0.0) {
    qfac = -1.0;
    r.col(2) = -r.col(2);
  }
  double a = r(0, 0) + r(1, 1) + r(2, 2) + 1.0;
  double b, c, d;
  if (a > 0.5) {
    a = 0.5 * std::sqrt(a);
    b = 0.25 * (r(2, 1) - r(1, 2)) / a;
    c = 0.25 * (r(0, 2) - r(2, 0)) / a;
    d = 0.25 * (r(1, 0) - r(0, 1)) / a;
  } else {
    const double xd = 1.0 + r(0, 0) - (r(1, 1) + r(2, 2));
    const double yd = 1.0 + r(1, 1) - (r(0, 0) + r(2, 2));
    const double zd = 1.0 + r(2, 2) - (r(0, 0) + r(1, 1));
    if (xd > 1.0) {
      b = 0.5 * std::sqrt(xd);
      c = 0.25 * (r(0, 1) + r(1, 0)) / b;
      d = 0.25 * (r(0, 2) + r(2, 0)) / b;
      a = 0.25 * (r(2, 1) - r(1, 2)) / b;
    } else if (yd > 1.0) {
      c = 0.5 * std::sqrt(yd);
      b = 0.25 * (r(0, 1) + r(1, 0)) / c;
      d = 0.25 * (r(1, 2) + r(2, 1)) / c;
      a = 0.25 * (r(0, 2) - r(2, 0)) / c;
    } else {
      d = 0.5 * std::sqrt(zd);
      b = 0.25 * (r(0, 2) + r(2, 0)) / d;
      c = 0.25 * (r(1, 2) + r(2, 1)) / d;
      a = 0.25 * (r(1, 0) - r(0, 1)) / d;
    }
    if (a < 0.0) {
      b = -b;
      c = -c;
      d = -d;
    }
  }
  h.quatern_b = static_cast<float>(b);
  h.quatern_c = static_cast<float>(c);
  h.quatern_d = static_cast<float>(d);
  h.qoffset_x = static_cast<float>(m(0, 3));
  h.qoffset_y = static_cast<float>(m(1, 3));
  h.qoffset_z = static_cast<float>(m(2, 3));
  h.pixdim[0] = static_cast<float>(qfac);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    fail(ErrorKind::Io, "cannot open '" + path + "': file not found");
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes;
  std::vector<std::uint8_t> chunk(1 << 20);
  for (;;) {
    const int n = gzread(f, chunk.data(), static_cast<unsigned>(chunk.size()));
    if (n < 0) {
      int code = 0;
      const std::string msg = gzerror(f, &code);
      gzclose(f);
      fail(ErrorKind::Parse, "corrupt compressed data in '" + path + "': " + msg);
    }
    if (n == 0) break;
    bytes.insert(bytes.end(), chunk.begin(), chunk.begin() + n);
  }
  gzclose(f);
  return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  if (ends_with(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "wb6");
    if (f == nullptr) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    std::size_t done = 0;
    while (done < bytes.size()) {
      const unsigned n = static_cast<unsigned>(std::min<std::size_t>(bytes.size() - done, 1 << 24));
      if (gzwrite(f, bytes.data() + done, n) != static_cast<int>(n)) {
        gzclose(f);
        fail(ErrorKind::Io, "write failed for '" + path + "'");
      }
      done += n;
    }
    if (gzclose(f) != Z_OK) fail(ErrorKind::Io, "write failed for '" + path + "'");
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write failed for '" + path + "'");
}

Nifti1Header make_header(const Grid& grid, int ndim, const std::array<std::int64_t, 5>& dims,
                         std::int16_t datatype) {
  Nifti1Header h;
  std::memset(&h, 0, sizeof(h));
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = static_cast<std::int16_t>(ndim);
  for (int a = 0; a < 7; ++a) {
    const std::int64_t d = a < ndim ? dims[static_cast<std::size_t>(a)] : 1;
    if (d > 32767) fail(ErrorKind::Validation, "dimension too large for NIfTI-1");
    h.dim[a + 1] = static_cast<std::int16_t>(d);
  }
  h.datatype = datatype;
  h.bitpix = static_cast<std::int16_t>(8 * datatype_size(datatype));
  for (int a = 0; a < 8; ++a) h.pixdim[a] = 1.0f;
  for (int a = 0; a < 3; ++a) h.pixdim[a + 1] = static_cast<float>(grid.spacing()[a]);
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.scl_inter = 0.0f;
  h.xyzt_units = 2;  // millimeters
  h.qform_code = 1;
  h.sform_code = 1;
  const Mat4& m = grid.voxel_to_world();
  set_quaternion(h, m);
  for (int c = 0; c < 4; ++c) {
    h.srow_x[c] = static_cast<float>(m(0, c));
    h.srow_y[c] = static_cast<float>(m(1, c));
    h.srow_z[c] = static_cast<float>(m(2, c));
  }
  std::strncpy(h.descrip, "bmreg", sizeof(h.descrip) - 1);
  std::memcpy(h.magic, "n+1\0", 4);
  return h;
}

template <class T>
void write_image(const std::string& path, const Nifti1Header& h, std::span<const T> values) {
  std::vector<std::uint8_t> bytes(352 + values.size() * sizeof(T), 0);
  std::memcpy(bytes.data(), &h, sizeof(h));
  std::memcpy(bytes.data() + 352, values.data(), values.size() * sizeof(T));
  write_file_bytes(path, bytes);
}

std::vector<float> to_float(std::span<const double> values) {
  std::vector<float> out(values.size());
  for (std::size_t n = 0; n < values.size(); ++n) out[n] = static_cast<float>(values[n]);
  return out;
}

Grid spatial_grid(const NiftiImage& img, const std::string& path) {
  try {
    return Grid({img.dims[0], img.dims[1], img.dims[2]}, img.voxel_to_world);
  } catch (const Error& e) {
    fail(ErrorKind::Parse, "'" + path + "': " + e.what());
  }
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

bool parse_number(const std::string& token, double& value) {
  if (token.empty()) return false;
  char* end = nullptr;
  value = std::strtod(token.c_str(), &end);
  return end == token.c_str() + token.size() && std::isfinite(value);
}

std::vector<std::pair<int, std::string>> content_lines(const std::string& text) {
  std::vector<std::pair<int, std::string>> lines;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    lines.emplace_back(number, t);
  }
  return lines;
}

}  // namespace

NiftiImage decode_nifti(std::span<const std::uint8_t> header_bytes,
                        std::optional<std::span<const std::uint8_t>> image_bytes) {
  if (header_bytes.size() < sizeof(Nifti1Header)) {
    fail(ErrorKind::Parse, "truncated file: header needs 348 bytes, found " +
                               std::to_string(header_bytes.size()));
  }
  NiftiImage img;
  Nifti1Header& h = img.header;
  std::memcpy(&h, header_bytes.data(), sizeof(h));

  bool swapped = false;
  if (h.sizeof_hdr != 348) {
    std::int32_t s = h.sizeof_hdr;
    swap_bytes(s);
    if (s != 348) fail(ErrorKind::Parse, "bad sizeof_hdr: expected 348, found " + std::to_string(h.sizeof_hdr));
    swap_header(h);
    swapped = true;
  }

  const bool single = std::memcmp(h.magic, "n+1\0", 4) == 0;
  const bool pair = std::memcmp(h.magic, "ni1\0", 4) == 0;
  if (!single && !pair) fail(ErrorKind::Parse, "bad magic: expected \"n+1\" or \"ni1\"");
  if (pair && !image_bytes) fail(ErrorKind::Parse, "bad magic: \"ni1\" header requires a separate .img file");

  const int ndim = h.dim[0];
  if (ndim < 1 || ndim > 7) fail(ErrorKind::Parse, "bad dim[0]: " + std::to_string(ndim));
  std::int64_t count = 1;
  for (int a = 0; a < 7; ++a) {
    const std::int64_t d = a < ndim ? h.dim[a + 1] : 1;
    if (d < 1) fail(ErrorKind::Parse, "bad dim[" + std::to_string(a + 1) + "]: " + std::to_string(d));
    img.dims[static_cast<std::size_t>(a)] = d;
    count *= d;
    if (count > (std::int64_t{1} << 36)) fail(ErrorKind::Parse, "bad dim: image too large");
  }

  const std::size_t element = datatype_size(h.datatype);
  if (element == 0) fail(ErrorKind::Parse, "unsupported datatype: " + std::to_string(h.datatype));

  if (!std::isfinite(h.vox_offset) || h.vox_offset < 0.0f || h.vox_offset > 1.0e9f)
    fail(ErrorKind::Parse, "bad vox_offset");
  const auto offset = static_cast<std::size_t>(h.vox_offset);
  if (single && offset < sizeof(Nifti1Header)) fail(ErrorKind::Parse, "bad vox_offset: inside header");

  const std::span<const std::uint8_t> data = single ? header_bytes : *image_bytes;
  const std::size_t needed = static_cast<std::size_t>(count) * element;
  if (offset > data.size() || data.size() - offset < needed) {
    fail(ErrorKind::Parse, "truncated file: data section needs " + std::to_string(needed) +
                               " bytes after offset " + std::to_string(offset) + ", found " +
                               std::to_string(data.size() > offset ? data.size() - offset : 0));
  }

  img.voxel_to_world = header_geometry(h);

  double slope = h.scl_slope;
  double inter = h.scl_inter;
  const bool scaled = std::isfinite(slope) && slope != 0.0;
  if (scaled && !std::isfinite(inter)) inter = 0.0;

  img.values.resize(static_cast<std::size_t>(count));
  const std::uint8_t* p = data.data() + offset;
  for (std::size_t n = 0; n < img.values.size(); ++n, p += element) {
    double v = 0.0;
    switch (h.datatype) {
      case nifti_code::kUInt8: v = *p; break;
      case nifti_code::kInt16: v = load_element<std::int16_t>(p, swapped); break;
      case nifti_code::kInt32: v = load_element<std::int32_t>(p, swapped); break;
      case nifti_code::kFloat32: v = load_element<float>(p, swapped); break;
      case nifti_code::kFloat64: v = load_element<double>(p, swapped); break;
    }
    if (scaled) v = slope * v + inter;
    img.values[n] = v;
  }
  return img;
}

NiftiImage read_nifti(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  std::string image_path;
  if (ends_with(path, ".hdr")) image_path = path.substr(0, path.size() - 4) + ".img";
  if (ends_with(path, ".hdr.gz")) image_path = path.substr(0, path.size() - 7) + ".img.gz";
  try {
    if (!image_path.empty() && bytes.size() >= 348 && std::memcmp(bytes.data() + 344, "ni1\0", 4) == 0) {
      const std::vector<std::uint8_t> image = read_file_bytes(image_path);
      return decode_nifti(bytes, std::span<const std::uint8_t>(image));
    }
    return decode_nifti(bytes);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) fail(ErrorKind::Parse, "'" + path + "': " + e.what());
    throw;
  }
}

Volume read_volume(const std::string& path) {
  NiftiImage img = read_nifti(path);
  for (std::size_t a = 3; a < 7; ++a) {
    if (img.dims[a] != 1) fail(ErrorKind::Parse, "'" + path + "': expected a 3-D volume");
  }
  for (std::size_t n = 0; n < img.values.size(); ++n) {
    if (!std::isfinite(img.values[n])) {
      fail(ErrorKind::Numerical, "'" + path + "': non-finite intensity at voxel " + std::to_string(n));
    }
  }
  Grid grid = spatial_grid(img, path);
  return Volume(std::move(grid), std::move(img.values));
}

void write_volume(const Volume& volume, const std::string& path) {
  const Index3& d = volume.grid().dims();
  const Nifti1Header h = make_header(volume.grid(), 3, {d[0], d[1], d[2], 1, 1}, nifti_code::kFloat32);
  const std::vector<float> values = to_float(volume.data());
  write_image<float>(path, h, values);
}

Mask read_mask(const std::string& path) { return Mask::from_volume(read_volume(path)); }

void write_mask(const Mask& mask, const std::string& path) {
  const Index3& d = mask.grid().dims();
  const Nifti1Header h = make_header(mask.grid(), 3, {d[0], d[1], d[2], 1, 1}, nifti_code::kUInt8);
  write_image<std::uint8_t>(path, h, mask.data());
}

DisplacementField read_field(const std::string& path) {
  NiftiImage img = read_nifti(path);
  const bool five_d = img.dims[3] == 1 && img.dims[4] == 3;
  const bool four_d = img.dims[3] == 3 && img.dims[4] == 1;
  if (!(five_d || four_d) || img.dims[5] != 1 || img.dims[6] != 1)
    fail(ErrorKind::Parse, "'" + path + "': expected a displacement field with 3 vector components");
  Grid grid = spatial_grid(img, path);
  const auto n = static_cast<std::size_t>(grid.voxel_count());
  std::vector<Vec3> vectors(n);
  for (std::size_t v = 0; v < n; ++v) {
    vectors[v] = Vec3(img.values[v], img.values[n + v], img.values[2 * n + v]);
    if (!vectors[v].allFinite())
      fail(ErrorKind::Numerical, "'" + path + "': non-finite displacement at voxel " + std::to_string(v));
  }
  return DisplacementField(std::move(grid), std::move(vectors));
}

void write_field(const DisplacementField& field, const std::string& path) {
  const Index3& d = field.grid().dims();
  Nifti1Header h = make_header(field.grid(), 5, {d[0], d[1], d[2], 1, 3}, nifti_code::kFloat32);
  h.intent_code = nifti_code::kIntentVector;
  std::memcpy(h.intent_name, "displacement_mm", 15);
  const auto n = field.vectors().size();
  std::vector<float> values(3 * n);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t c = 0; c < 3; ++c) values[c * n + v] = static_cast<float>(field.vectors()[v][static_cast<int>(c)]);
  }
  write_image<float>(path, h, std::span<const float>(values));
}

void write_channels(const Grid& grid, std::span<const double> channel_major, int channels,
                    const std::string& path) {
  if (channels < 1 || static_cast<std::int64_t>(channel_major.size()) != grid.voxel_count() * channels)
    fail(ErrorKind::Validation, "channel data does not match grid");
  const Index3& d = grid.dims();
  const Nifti1Header h = make_header(grid, 4, {d[0], d[1], d[2], channels, 1}, nifti_code::kFloat32);
  const std::vector<float> values = to_float(channel_major);
  write_image<float>(path, h, values);
}

LandmarkSet parse_landmarks(const std::string& text) {
  LandmarkSet set;
  bool labeled = false;
  bool first = true;
  for (const auto& [number, line] : content_lines(text)) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      fields.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos
                                                                        ? std::string::npos
                                                                        : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    const std::string where = "landmarks line " + std::to_string(number) + ": ";
    if (fields.size() != 3 && fields.size() != 4)
      fail(ErrorKind::Parse, where + "expected 'label, x, y, z', found " + std::to_string(fields.size()) + " fields");
    const bool has_label = fields.size() == 4;
    if (first) {
      labeled = has_label;
      first = false;
    } else if (has_label != labeled) {
      fail(ErrorKind::Parse, where + "mixed labeled and unlabeled rows");
    }
    const std::size_t base = has_label ? 1 : 0;
    Vec3 p;
    for (int a = 0; a < 3; ++a) {
      if (!parse_number(fields[base + static_cast<std::size_t>(a)], p[a]))
        fail(ErrorKind::Parse, where + "invalid coordinate '" + fields[base + static_cast<std::size_t>(a)] + "'");
    }
    set.points.push_back(p);
    if (has_label) set.labels.push_back(fields[0]);
  }
  return set;
}

std::string format_landmarks(const LandmarkSet& set) {
  set.validate();
  std::string out;
  for (std::size_t n = 0; n < set.points.size(); ++n) {
    if (!set.labels.empty()) {
      const std::string& label = set.labels[n];
      if (label.find_first_of(",\n\r") != std::string::npos || trim(label) != label || label.empty() ||
          label[0] == '#')
        fail(ErrorKind::Validation, "landmark label '" + label + "' cannot be written");
      out += label + ", ";
    }
    out += format_number(set.points[n][0]) + ", " + format_number(set.points[n][1]) + ", " +
           format_number(set.points[n][2]) + "\n";
  }
  return out;
}

LandmarkSet read_landmarks(const std::string& path) {
  try {
    return parse_landmarks(read_text_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) fail(ErrorKind::Parse, "'" + path + "': " + e.what());
    throw;
  }
}

void write_landmarks(const LandmarkSet& set, const std::string& path) {
  write_text_file(path, format_landmarks(set));
}

AffineTransform parse_affine(const std::string& text) {
  const auto lines = content_lines(text);
  if (lines.size() != 4)
    fail(ErrorKind::Parse, "affine: expected 4 rows, found " + std::to_string(lines.size()));
  Mat4 m;
  for (int r = 0; r < 4; ++r) {
    std::istringstream row(lines[static_cast<std::size_t>(r)].second);
    std::vector<std::string> tokens;
    std::string token;
    while (row >> token) tokens.push_back(token);
    if (tokens.size() != 4) {
      fail(ErrorKind::Parse, "affine row " + std::to_string(r + 1) + ": expected 4 columns, found " +
                                 std::to_string(tokens.size()));
    }
    for (int c = 0; c < 4; ++c) {
      if (!parse_number(tokens[static_cast<std::size_t>(c)], m(r, c)))
        fail(ErrorKind::Parse, "affine row " + std::to_string(r + 1) + ": invalid number '" +
                                   tokens[static_cast<std::size_t>(c)] + "'");
    }
  }
  try {
    return AffineTransform(m);
  } catch (const Error& e) {
    fail(ErrorKind::Parse, std::string("affine: ") + e.what());
  }
}

std::string format_affine(const AffineTransform& transform) {
  std::string out;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      out += format_number(transform.matrix()(r, c));
      out += c < 3 ? " " : "\n";
    }
  }
  return out;
}

AffineTransform read_affine(const std::string& path) {
  try {
    return parse_affine(read_text_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) fail(ErrorKind::Parse, "'" + path + "': " + e.what());
    throw;
  }
}

void write_affine(const AffineTransform& transform, const std::string& path) {
  write_text_file(path, format_affine(transform));
}

std::string read_text_file(const std::string& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    fail(ErrorKind::Io, "cannot open '" + path + "': file not found");
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
  out << contents;
  if (!out) fail(ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace bmreg

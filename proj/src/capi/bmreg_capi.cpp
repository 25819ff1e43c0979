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
#include "bmreg/bmreg.h"

#include <cstdlib>
#include <cstring>
#include <mutex>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "affine_pipeline.hpp"
#include "deformable.hpp"
#include "evaluation.hpp"
#include "nifti_io.hpp"
#include "pipeline.hpp"
#include "resample.hpp"
#include "version.hpp"

struct bmreg_volume {
  bmreg::Volume value;
};
struct bmreg_field {
  bmreg::DisplacementField value;
};
struct bmreg_landmarks {
  bmreg::LandmarkSet value;
};

namespace {

thread_local std::string t_last_error;

struct NullArgument {
  const char* name;
};

bmreg_status status_of(bmreg::ErrorKind kind) {
  switch (kind) {
    case bmreg::ErrorKind::Validation: return BMREG_ERR_VALIDATION;
    case bmreg::ErrorKind::Geometry: return BMREG_ERR_GEOMETRY;
    case bmreg::ErrorKind::Parse: return BMREG_ERR_PARSE;
    case bmreg::ErrorKind::Io: return BMREG_ERR_IO;
    case bmreg::ErrorKind::Rank: return BMREG_ERR_RANK;
    case bmreg::ErrorKind::Size: return BMREG_ERR_SIZE;
    case bmreg::ErrorKind::Stage: return BMREG_ERR_STAGE;
    case bmreg::ErrorKind::Numerical: return BMREG_ERR_NUMERICAL;
  }
  return BMREG_ERR_INTERNAL;
}

template <class Fn>
bmreg_status guarded(Fn&& fn) {
  try {
    fn();
    t_last_error.clear();
    return BMREG_OK;
  } catch (const NullArgument& e) {
    t_last_error = std::string("null argument: ") + e.name;
    return BMREG_ERR_NULL_ARGUMENT;
  } catch (const bmreg::Error& e) {
    t_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    t_last_error = "out of memory";
    return BMREG_ERR_INTERNAL;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return BMREG_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return BMREG_ERR_INTERNAL;
  }
}

template <class T>
const T& need(const T* p, const char* name) {
  if (p == nullptr) throw NullArgument{name};
  return *p;
}

std::string need_path(const char* path) {
  if (path == nullptr) throw NullArgument{"path"};
  return path;
}

void need_out(const void* p, const char* name) {
  if (p == nullptr) throw NullArgument{name};
}

bmreg::Mat4 to_mat4(const double* m) {
  if (m == nullptr) throw NullArgument{"matrix"};
  bmreg::Mat4 out;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out(r, c) = m[4 * r + c];
  return out;
}

void from_mat4(const bmreg::Mat4& m, double* out) {
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out[4 * r + c] = m(r, c);
}

bmreg::Grid to_grid(const int64_t* dims, const double* voxel_to_world) {
  if (dims == nullptr) throw NullArgument{"dims"};
  return bmreg::Grid({dims[0], dims[1], dims[2]}, to_mat4(voxel_to_world));
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

bmreg::SscParams to_ssc(const bmreg_ssc_params* p) {
  bmreg::SscParams out;
  if (p != nullptr) {
    out.patch_radius = p->patch_radius;
    out.neighbor_step = p->neighbor_step;
    out.epsilon = p->epsilon;
  }
  return out;
}

void check_levels(int count) {
  if (count < 1 || count > BMREG_MAX_LEVELS)
    bmreg::fail(bmreg::ErrorKind::Validation,
                "level_count must be in [1, " + std::to_string(BMREG_MAX_LEVELS) + "]");
}

bmreg::AffineStageConfig to_affine(const bmreg_affine_config& c) {
  check_levels(c.level_count);
  bmreg::AffineStageConfig out;
  out.levels.clear();
  for (int l = 0; l < c.level_count; ++l) out.levels.push_back({c.level_spacing_mm[l], c.level_iterations[l]});
  out.block_match.block_size = c.block_size;
  out.block_match.active_fraction = c.active_fraction;
  out.block_match.search_radius = c.search_radius;
  out.block_match.search_stride = c.search_stride;
  out.lts.inlier_proportion = c.inlier_proportion;
  out.lts.max_iterations = c.lts_max_iterations;
  out.lts.convergence_tol = c.lts_tolerance_mm;
  switch (c.initializer) {
    case BMREG_INIT_CENTER: out.initializer = bmreg::AffineInitializer::CenterAlignment; break;
    case BMREG_INIT_IDENTITY: out.initializer = bmreg::AffineInitializer::Identity; break;
    case BMREG_INIT_GIVEN:
      out.initializer = bmreg::AffineInitializer::Given;
      out.initial = bmreg::AffineTransform(to_mat4(c.initial));
      break;
    default: bmreg::fail(bmreg::ErrorKind::Validation, "unknown initializer");
  }
  out.background = c.background;
  return out;
}

bmreg::DeformableConfig to_deformable(const bmreg_deformable_config& c) {
  check_levels(c.level_count);
  bmreg::DeformableConfig out;
  out.smoothness = c.smoothness;
  out.levels.assign(c.level_spacing_mm, c.level_spacing_mm + c.level_count);
  out.iterations_per_level = c.iterations_per_level;
  out.step_size = c.step_size_mm;
  switch (c.similarity) {
    case BMREG_SIM_SSC_SSD: out.similarity = bmreg::DeformableSimilarity::SscSsd; break;
    case BMREG_SIM_LOCAL_NCC: out.similarity = bmreg::DeformableSimilarity::LocalNcc; break;
    default: bmreg::fail(bmreg::ErrorKind::Validation, "unknown similarity");
  }
  out.ssc = to_ssc(&c.ssc);
  out.ncc_radius = c.ncc_radius;
  return out;
}

bmreg::Interpolation to_interp(bmreg_interpolation i) {
  switch (i) {
    case BMREG_NEAREST: return bmreg::Interpolation::Nearest;
    case BMREG_TRILINEAR: return bmreg::Interpolation::Trilinear;
  }
  bmreg::fail(bmreg::ErrorKind::Validation, "unknown interpolation");
}

bmreg::Mask to_mask(const bmreg::Volume& v) { return bmreg::Mask::from_volume(v); }

bmreg::PipelineConfig to_pipeline(const bmreg_pipeline_config& c) {
  auto str = [](const char* s) { return s == nullptr ? std::string() : std::string(s); };
  bmreg::PipelineConfig out;
  out.fixed_path = str(c.fixed_path);
  out.moving_path = str(c.moving_path);
  out.mask_path = str(c.mask_path);
  out.fixed_landmarks_path = str(c.fixed_landmarks_path);
  out.moving_landmarks_path = str(c.moving_landmarks_path);
  out.output_dir = str(c.output_dir);
  out.affine = to_affine(c.affine);
  out.deformable = to_deformable(c.deformable);
  out.ssc = to_ssc(&c.ssc);
  out.grid_search = c.grid_search != 0;
  if (c.candidate_count >= 0) {
    if (c.candidate_count > 0 && c.candidates == nullptr) throw NullArgument{"candidates"};
    out.candidates.assign(c.candidates, c.candidates + c.candidate_count);
  }
  out.direction = c.reverse ? bmreg::Direction::Reverse : bmreg::Direction::Forward;
  out.background = c.background;
  out.crop_margin_voxels = c.crop_margin_voxels;
  out.run_deformable = c.run_deformable != 0;
  return out;
}

std::mutex g_log_mutex;
bmreg_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

}  // namespace

extern "C" {

const char* bmreg_version(void) { return bmreg::kVersionString; }

const char* bmreg_last_error(void) { return t_last_error.c_str(); }

const char* bmreg_status_name(bmreg_status status) {
  switch (status) {
    case BMREG_OK: return "ok";
    case BMREG_ERR_VALIDATION: return "validation error";
    case BMREG_ERR_GEOMETRY: return "geometry error";
    case BMREG_ERR_PARSE: return "parse error";
    case BMREG_ERR_IO: return "i/o error";
    case BMREG_ERR_RANK: return "rank error";
    case BMREG_ERR_SIZE: return "size error";
    case BMREG_ERR_STAGE: return "stage error";
    case BMREG_ERR_NUMERICAL: return "numerical error";
    case BMREG_ERR_NULL_ARGUMENT: return "null argument";
    case BMREG_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

bmreg_status bmreg_set_threads(int count) {
  return guarded([&] {
    if (count < 0) bmreg::fail(bmreg::ErrorKind::Validation, "thread count must be >= 0");
    bmreg::set_thread_count(count);
  });
}

int bmreg_get_threads(void) { return bmreg::thread_count(); }

void bmreg_set_log_callback(bmreg_log_fn fn, void* user) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
  if (fn == nullptr) {
    bmreg::set_log_sink(nullptr);
  } else {
    bmreg::set_log_sink([](const std::string& message) {
      std::lock_guard<std::mutex> inner(g_log_mutex);
      if (g_log_fn != nullptr) g_log_fn(message.c_str(), g_log_user);
    });
  }
}

void bmreg_string_free(char* s) { std::free(s); }

bmreg_status bmreg_volume_create(const int64_t dims[3], const double voxel_to_world[16], const double* data,
                                 bmreg_volume** out) {
  return guarded([&] {
    need_out(out, "out");
    *out = nullptr;
    bmreg::Grid grid = to_grid(dims, voxel_to_world);
    if (data == nullptr) throw NullArgument{"data"};
    std::vector<double> values(data, data + grid.voxel_count());
    *out = new bmreg_volume{bmreg::Volume(std::move(grid), std::move(values))};
  });
}

bmreg_status bmreg_volume_read(const char* path, bmreg_volume** out) {
  return guarded([&] {
    need_out(out, "out");
    *out = nullptr;
    const std::string p = need_path(path);
    *out = new bmreg_volume{bmreg::read_volume(p)};
  });
}

bmreg_status bmreg_volume_write(const bmreg_volume* volume, const char* path) {
  return guarded([&] { bmreg::write_volume(need(volume, "volume").value, need_path(path)); });
}

bmreg_status bmreg_mask_write(const bmreg_volume* mask, const char* path) {
  return guarded([&] { bmreg::write_mask(to_mask(need(mask, "mask").value), need_path(path)); });
}

void bmreg_volume_free(bmreg_volume* volume) { delete volume; }

bmreg_status bmreg_volume_dims(const bmreg_volume* volume, int64_t dims[3]) {
  return guarded([&] {
    need_out(dims, "dims");
    const auto& d = need(volume, "volume").value.grid().dims();
    for (int a = 0; a < 3; ++a) dims[a] = d[static_cast<std::size_t>(a)];
  });
}

bmreg_status bmreg_volume_geometry(const bmreg_volume* volume, double voxel_to_world[16]) {
  return guarded([&] {
    need_out(voxel_to_world, "voxel_to_world");
    from_mat4(need(volume, "volume").value.grid().voxel_to_world(), voxel_to_world);
  });
}

bmreg_status bmreg_volume_copy_data(const bmreg_volume* volume, double* out, size_t count) {
  return guarded([&] {
    need_out(out, "out");
    const auto data = need(volume, "volume").value.data();
    if (count != data.size())
      bmreg::fail(bmreg::ErrorKind::Validation, "buffer holds " + std::to_string(count) + " values, volume has " +
                                                    std::to_string(data.size()));
    std::memcpy(out, data.data(), count * sizeof(double));
  });
}

bmreg_status bmreg_field_create(const int64_t dims[3], const double voxel_to_world[16], const double* vectors,
                                bmreg_field** out) {
  return guarded([&] {
    need_out(out, "out");
    *out = nullptr;
    bmreg::Grid grid = to_grid(dims, voxel_to_world);
    if (vectors == nullptr) throw NullArgument{"vectors"};
    std::vector<bmreg::Vec3> v(static_cast<std::size_t>(grid.voxel_count()));
    for (std::size_t n = 0; n < v.size(); ++n) v[n] = bmreg::Vec3(vectors[3 * n], vectors[3 * n + 1], vectors[3 * n + 2]);
    *out = new bmreg_field{bmreg::DisplacementField(std::move(grid), std::move(v))};
  });
}

bmreg_status bmreg_field_read(const char* path, bmreg_field** out) {
  return guarded([&] {
    need_out(out, "out");
    *out = nullptr;
    const std::string p = need_path(path);
    *out = new bmreg_field{bmreg::read_field(p)};
  });
}

bmreg_status bmreg_field_write(const bmreg_field* field, const char* path) {
  return guarded([&] { bmreg::write_field(need(field, "field").value, need_path(path)); });
}

void bmreg_field_free(bmreg_field* field) { delete field; }

bmreg_status bmreg_field_dims(const bmreg_field* field, int64_t dims[3]) {
  return guarded([&] {
    need_out(dims, "dims");
    const auto& d = need(field, "field").value.grid().dims();
    for (int a = 0; a < 3; ++a) dims[a] = d[static_cast<std::size_t>(a)];
  });
}

bmreg_status bmreg_field_copy_data(const bmreg_field* field, double* out, size_t count) {
  return guarded([&] {
    need_out(out, "out");
    const auto& v = need(field, "field").value.vectors();
    if (count != 3 * v.size())
      bmreg::fail(bmreg::ErrorKind::Validation, "buffer holds " + std::to_string(count) + " values, field has " +
                                                    std::to_string(3 * v.size()));
    for (std::size_t n = 0; n < v.size(); ++n)
      for (int a = 0; a < 3; ++a) out[3 * n + static_cast<std::size_t>(a)] = v[n][a];
  });
}

bmreg_status bmreg_field_max_magnitude(const bmreg_field* field, double* out) {
  return guarded([&] {
    need_out(out, "out");
    *out = need(field, "field").value.max_magnitude();
  });
}

bmreg_status bmreg_landmarks_create(const double* xyz, size_t count, bmreg_landmarks** out) {
  return guarded([&] {
    need_out(out, "out");
    *out = nullptr;
    if (count > 0 && xyz == nullptr) throw NullArgument{"xyz"};
    bmreg::LandmarkSet set;
    for (std::size_t n = 0; n < count; ++n) set.points.emplace_back(xyz[3 * n], xyz[3 * n + 1], xyz[3 * n + 2]);
    set.validate();
    *out = new bmreg_landmarks{std::move(set)};
  });
}

bmreg_status bmreg_landmarks_read(const char* path, bmreg_landmarks** out) {
  return guarded([&] {
    need_out(out, "out");
    *out = nullptr;
    const std::string p = need_path(path);
    *out = new bmreg_landmarks{bmreg::read_landmarks(p)};
  });
}

bmreg_status bmreg_landmarks_write(const bmreg_landmarks* set, const char* path) {
  return guarded([&] { bmreg::write_landmarks(need(set, "landmarks").value, need_path(path)); });
}

void bmreg_landmarks_free(bmreg_landmarks* set) { delete set; }

size_t bmreg_landmarks_count(const bmreg_landmarks* set) { return set == nullptr ? 0 : set->value.size(); }

bmreg_status bmreg_landmarks_copy_points(const bmreg_landmarks* set, double* xyz, size_t count) {
  return guarded([&] {
    const auto& s = need(set, "landmarks").value;
    if (count != s.size()) bmreg::fail(bmreg::ErrorKind::Validation, "landmark count mismatch");
    if (count > 0) need_out(xyz, "xyz");
    for (std::size_t n = 0; n < count; ++n)
      for (int a = 0; a < 3; ++a) xyz[3 * n + static_cast<std::size_t>(a)] = s.points[n][a];
  });
}

bmreg_status bmreg_affine_read(const char* path, double affine[16]) {
  return guarded([&] {
    need_out(affine, "affine");
    from_mat4(bmreg::read_affine(need_path(path)).matrix(), affine);
  });
}

bmreg_status bmreg_affine_write(const double affine[16], const char* path) {
  return guarded([&] { bmreg::write_affine(bmreg::AffineTransform(to_mat4(affine)), need_path(path)); });
}

void bmreg_ssc_params_default(bmreg_ssc_params* params) {
  if (params == nullptr) return;
  const bmreg::SscParams d;
  params->patch_radius = d.patch_radius;
  params->neighbor_step = d.neighbor_step;
  params->epsilon = d.epsilon;
}

void bmreg_affine_config_default(bmreg_affine_config* config) {
  if (config == nullptr) return;
  std::memset(config, 0, sizeof(*config));
  const bmreg::AffineStageConfig d;
  config->level_count = static_cast<int>(d.levels.size());
  for (std::size_t l = 0; l < d.levels.size(); ++l) {
    config->level_spacing_mm[l] = d.levels[l].spacing_mm;
    config->level_iterations[l] = d.levels[l].outer_iterations;
  }
  config->block_size = d.block_match.block_size;
  config->active_fraction = d.block_match.active_fraction;
  config->search_radius = d.block_match.search_radius;
  config->search_stride = d.block_match.search_stride;
  config->inlier_proportion = d.lts.inlier_proportion;
  config->lts_max_iterations = d.lts.max_iterations;
  config->lts_tolerance_mm = d.lts.convergence_tol;
  config->initializer = BMREG_INIT_CENTER;
  from_mat4(bmreg::Mat4::Identity(), config->initial);
  config->background = d.background;
}

void bmreg_deformable_config_default(bmreg_deformable_config* config) {
  if (config == nullptr) return;
  std::memset(config, 0, sizeof(*config));
  const bmreg::DeformableConfig d;
  config->smoothness = d.smoothness;
  config->level_count = static_cast<int>(d.levels.size());
  for (std::size_t l = 0; l < d.levels.size(); ++l) config->level_spacing_mm[l] = d.levels[l];
  config->iterations_per_level = d.iterations_per_level;
  config->step_size_mm = d.step_size;
  config->similarity = BMREG_SIM_SSC_SSD;
  bmreg_ssc_params_default(&config->ssc);
  config->ncc_radius = d.ncc_radius;
}

void bmreg_pipeline_config_default(bmreg_pipeline_config* config) {
  if (config == nullptr) return;
  std::memset(config, 0, sizeof(*config));
  bmreg_affine_config_default(&config->affine);
  bmreg_deformable_config_default(&config->deformable);
  bmreg_ssc_params_default(&config->ssc);
  const bmreg::PipelineConfig d;
  config->candidate_count = -1;
  config->background = d.background;
  config->crop_margin_voxels = d.crop_margin_voxels;
  config->run_deformable = d.run_deformable ? 1 : 0;
}

bmreg_status bmreg_register_affine(const bmreg_volume* fixed, const bmreg_volume* moving,
                                   const bmreg_affine_config* config, double affine[16], char** diagnostics_csv) {
  return guarded([&] {
    need_out(affine, "affine");
    if (diagnostics_csv != nullptr) *diagnostics_csv = nullptr;
    auto [t, diag] = bmreg::register_affine(need(fixed, "fixed").value, need(moving, "moving").value,
                                            to_affine(need(config, "config")));
    from_mat4(t.matrix(), affine);
    if (diagnostics_csv != nullptr) *diagnostics_csv = dup_string(bmreg::render_affine_diagnostics_csv(diag));
  });
}

bmreg_status bmreg_register_deformable(const bmreg_volume* fixed, const bmreg_volume* moving,
                                       const bmreg_volume* roi, const bmreg_deformable_config* config,
                                       bmreg_field** out, char** diagnostics_csv) {
  return guarded([&] {
    need_out(out, "out");
    *out = nullptr;
    if (diagnostics_csv != nullptr) *diagnostics_csv = nullptr;
    auto [field, diag] = bmreg::register_deformable(need(fixed, "fixed").value, need(moving, "moving").value,
                                                    to_mask(need(roi, "roi").value),
                                                    to_deformable(need(config, "config")));
    if (diagnostics_csv != nullptr) {
      std::ostringstream csv;
      csv << "level,spacing_mm,iteration,objective,step_mm\n";
      for (const auto& it : diag.iterations)
        csv << it.level << ',' << bmreg::format_number(it.spacing_mm) << ',' << it.iteration << ','
            << bmreg::format_number(it.objective) << ',' << bmreg::format_number(it.step_mm) << '\n';
      *diagnostics_csv = dup_string(csv.str());
    }
    *out = new bmreg_field{std::move(field)};
  });
}

bmreg_status bmreg_apply_affine(const bmreg_volume* moving, const double affine[16], const bmreg_volume* target,
                                bmreg_interpolation interp, double background, bmreg_volume** out) {
  return guarded([&] {
    need_out(out, "out");
    *out = nullptr;
    *out = new bmreg_volume{bmreg::apply_affine(need(moving, "moving").value, bmreg::AffineTransform(to_mat4(affine)),
                                                need(target, "target").value.grid(), to_interp(interp), background)};
  });
}

bmreg_status bmreg_apply_field(const bmreg_volume* moving, const bmreg_field* field, bmreg_interpolation interp,
                               double background, bmreg_volume** out) {
  return guarded([&] {
    need_out(out, "out");
    *out = nullptr;
    *out = new bmreg_volume{
        bmreg::apply_field(need(moving, "moving").value, need(field, "field").value, to_interp(interp), background)};
  });
}

bmreg_status bmreg_compose_affine_field(const double affine[16], const bmreg_field* field, bmreg_field** out) {
  return guarded([&] {
    need_out(out, "out");
    *out = nullptr;
    *out = new bmreg_field{
        bmreg::compose_affine_then_field(bmreg::AffineTransform(to_mat4(affine)), need(field, "field").value)};
  });
}

bmreg_status bmreg_ssc_mse(const bmreg_volume* fixed, const bmreg_volume* moving, const bmreg_volume* mask,
                           const bmreg_ssc_params* params, double* out) {
  return guarded([&] {
    need_out(out, "out");
    std::optional<bmreg::Mask> m;
    if (mask != nullptr) m = to_mask(mask->value);
    *out = bmreg::ssc_mse(need(fixed, "fixed").value, need(moving, "moving").value, m ? &*m : nullptr,
                          to_ssc(params));
  });
}

bmreg_status bmreg_compute_tre(const bmreg_landmarks* fixed, const bmreg_landmarks* moving, const double affine[16],
                               const bmreg_field* field, double* mean, double* per_landmark, int* affine_only,
                               size_t count) {
  return guarded([&] {
    need_out(mean, "mean");
    const bmreg::TreResult r =
        bmreg::compute_tre(need(fixed, "fixed").value, need(moving, "moving").value,
                           bmreg::AffineTransform(to_mat4(affine)), field == nullptr ? nullptr : &field->value);
    if ((per_landmark != nullptr || affine_only != nullptr) && count != r.per_landmark_mm.size())
      bmreg::fail(bmreg::ErrorKind::Validation, "output arrays must hold one entry per landmark");
    *mean = r.mean_mm;
    for (std::size_t i = 0; i < r.per_landmark_mm.size(); ++i) {
      if (per_landmark != nullptr) per_landmark[i] = r.per_landmark_mm[i];
      if (affine_only != nullptr) affine_only[i] = r.affine_only[i] ? 1 : 0;
    }
  });
}

bmreg_status bmreg_grid_search(const bmreg_volume* fixed, const bmreg_volume* moving, const bmreg_affine_config* config,
                               const double* candidates, size_t candidate_count, const bmreg_volume* mask,
                               const bmreg_ssc_params* params, double* best_proportion, double* scores, int* ok) {
  return guarded([&] {
    need_out(best_proportion, "best_proportion");
    if (candidate_count > 0 && candidates == nullptr) throw NullArgument{"candidates"};
    std::optional<bmreg::Mask> m;
    if (mask != nullptr) m = to_mask(mask->value);
    const std::vector<double> c(candidates, candidates + candidate_count);
    const bmreg::GridSearchResult r =
        bmreg::grid_search_proportion(need(fixed, "fixed").value, need(moving, "moving").value,
                                      to_affine(need(config, "config")), c, m ? &*m : nullptr, to_ssc(params));
    *best_proportion = r.best_proportion;
    for (std::size_t i = 0; i < r.table.size(); ++i) {
      if (scores != nullptr) scores[i] = r.table[i].ok ? r.table[i].ssc_mse : 0.0;
      if (ok != nullptr) ok[i] = r.table[i].ok ? 1 : 0;
    }
  });
}

bmreg_status bmreg_jacobian(const bmreg_field* field, bmreg_volume** out) {
  return guarded([&] {
    need_out(out, "out");
    *out = nullptr;
    *out = new bmreg_volume{bmreg::jacobian_determinants(need(field, "field").value)};
  });
}

bmreg_status bmreg_crop_to_mask(const bmreg_volume* volume, const bmreg_volume* mask, int64_t margin_voxels,
                                bmreg_volume** out) {
  return guarded([&] {
    need_out(out, "out");
    *out = nullptr;
    if (margin_voxels < 0) bmreg::fail(bmreg::ErrorKind::Validation, "margin must be >= 0");
    *out = new bmreg_volume{
        bmreg::crop_to_mask(need(volume, "volume").value, to_mask(need(mask, "mask").value), margin_voxels)};
  });
}

bmreg_status bmreg_pipeline_check(const bmreg_pipeline_config* config, char** problems) {
  return guarded([&] {
    need_out(problems, "problems");
    *problems = nullptr;
    const auto list = to_pipeline(need(config, "config")).problems();
    if (list.empty()) return;
    std::string joined;
    for (const auto& p : list) joined += p + "\n";
    *problems = dup_string(joined);
  });
}

bmreg_status bmreg_run_pipeline(const bmreg_pipeline_config* config, char** report_json) {
  return guarded([&] {
    if (report_json != nullptr) *report_json = nullptr;
    const bmreg::PipelineResult r = bmreg::run_pipeline(to_pipeline(need(config, "config")));
    if (report_json != nullptr) *report_json = dup_string(r.report_json);
  });
}

}  // extern "C"

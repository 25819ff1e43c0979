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
#ifndef BMREG_BMREG_H
#define BMREG_BMREG_H

/* C interface to the bmreg registration library.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every call that can fail returns a bmreg_status; the message of the last
 * failure on the calling thread is available from bmreg_last_error().
 * Affine transforms are 16 doubles, row-major, mapping fixed world
 * coordinates (mm) to moving world coordinates. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(BMREG_BUILDING)
#    define BMREG_API __declspec(dllexport)
#  else
#    define BMREG_API __declspec(dllimport)
#  endif
#else
#  define BMREG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bmreg_status {
  BMREG_OK = 0,
  BMREG_ERR_VALIDATION = 1,
  BMREG_ERR_GEOMETRY = 2,
  BMREG_ERR_PARSE = 3,
  BMREG_ERR_IO = 4,
  BMREG_ERR_RANK = 5,
  BMREG_ERR_SIZE = 6,
  BMREG_ERR_STAGE = 7,
  BMREG_ERR_NUMERICAL = 8,
  BMREG_ERR_NULL_ARGUMENT = 9,
  BMREG_ERR_INTERNAL = 10
} bmreg_status;

enum { BMREG_MAX_LEVELS = 8 };

typedef enum bmreg_interpolation { BMREG_NEAREST = 0, BMREG_TRILINEAR = 1 } bmreg_interpolation;
typedef enum bmreg_initializer {
  BMREG_INIT_CENTER = 0,
  BMREG_INIT_IDENTITY = 1,
  BMREG_INIT_GIVEN = 2
} bmreg_initializer;
typedef enum bmreg_similarity { BMREG_SIM_SSC_SSD = 0, BMREG_SIM_LOCAL_NCC = 1 } bmreg_similarity;

typedef struct bmreg_volume bmreg_volume;       /* scalar image; masks are volumes, nonzero = inside */
typedef struct bmreg_field bmreg_field;         /* displacement field, world mm */
typedef struct bmreg_landmarks bmreg_landmarks; /* ordered world-space points */

BMREG_API const char* bmreg_version(void);
BMREG_API const char* bmreg_last_error(void);
BMREG_API const char* bmreg_status_name(bmreg_status status);

/* 0 restores the default (BMREG_THREADS or the hardware concurrency). */
BMREG_API bmreg_status bmreg_set_threads(int count);
BMREG_API int bmreg_get_threads(void);

typedef void (*bmreg_log_fn)(const char* message, void* user);
/* NULL restores logging to stderr. */
BMREG_API void bmreg_set_log_callback(bmreg_log_fn fn, void* user);

/* Strings returned through char** out-parameters. */
BMREG_API void bmreg_string_free(char* s);

/* ---- volumes ---- */
BMREG_API bmreg_status bmreg_volume_create(const int64_t dims[3], const double voxel_to_world[16],
                                           const double* data, bmreg_volume** out);
BMREG_API bmreg_status bmreg_volume_read(const char* path, bmreg_volume** out);
BMREG_API bmreg_status bmreg_volume_write(const bmreg_volume* volume, const char* path);
BMREG_API bmreg_status bmreg_mask_write(const bmreg_volume* mask, const char* path);
BMREG_API void bmreg_volume_free(bmreg_volume* volume);
BMREG_API bmreg_status bmreg_volume_dims(const bmreg_volume* volume, int64_t dims[3]);
BMREG_API bmreg_status bmreg_volume_geometry(const bmreg_volume* volume, double voxel_to_world[16]);
/* count must equal the voxel count. */
BMREG_API bmreg_status bmreg_volume_copy_data(const bmreg_volume* volume, double* out, size_t count);

/* ---- displacement fields ---- */
/* vectors holds 3 doubles (x, y, z) per voxel in voxel order. */
BMREG_API bmreg_status bmreg_field_create(const int64_t dims[3], const double voxel_to_world[16],
                                          const double* vectors, bmreg_field** out);
BMREG_API bmreg_status bmreg_field_read(const char* path, bmreg_field** out);
BMREG_API bmreg_status bmreg_field_write(const bmreg_field* field, const char* path);
BMREG_API void bmreg_field_free(bmreg_field* field);
BMREG_API bmreg_status bmreg_field_dims(const bmreg_field* field, int64_t dims[3]);
BMREG_API bmreg_status bmreg_field_copy_data(const bmreg_field* field, double* out, size_t count);
BMREG_API bmreg_status bmreg_field_max_magnitude(const bmreg_field* field, double* out);

/* ---- landmarks and affine text ---- */
BMREG_API bmreg_status bmreg_landmarks_create(const double* xyz, size_t count, bmreg_landmarks** out);
BMREG_API bmreg_status bmreg_landmarks_read(const char* path, bmreg_landmarks** out);
BMREG_API bmreg_status bmreg_landmarks_write(const bmreg_landmarks* set, const char* path);
BMREG_API void bmreg_landmarks_free(bmreg_landmarks* set);
BMREG_API size_t bmreg_landmarks_count(const bmreg_landmarks* set);
BMREG_API bmreg_status bmreg_landmarks_copy_points(const bmreg_landmarks* set, double* xyz, size_t count);

BMREG_API bmreg_status bmreg_affine_read(const char* path, double affine[16]);
BMREG_API bmreg_status bmreg_affine_write(const double affine[16], const char* path);

/* ---- configuration ---- */
typedef struct bmreg_ssc_params {
  int patch_radius;
  int neighbor_step;
  double epsilon;
} bmreg_ssc_params;

typedef struct bmreg_affine_config {
  int level_count;
  double level_spacing_mm[BMREG_MAX_LEVELS];
  int level_iterations[BMREG_MAX_LEVELS];
  int block_size;
  double active_fraction;
  int search_radius;
  int search_stride;
  double inlier_proportion;
  int lts_max_iterations;
  double lts_tolerance_mm;
  bmreg_initializer initializer;
  double initial[16]; /* used with BMREG_INIT_GIVEN */
  double background;
} bmreg_affine_config;

typedef struct bmreg_deformable_config {
  double smoothness;
  int level_count;
  double level_spacing_mm[BMREG_MAX_LEVELS];
  int iterations_per_level;
  double step_size_mm;
  bmreg_similarity similarity;
  bmreg_ssc_params ssc;
  int ncc_radius;
} bmreg_deformable_config;

typedef struct bmreg_pipeline_config {
  const char* fixed_path;
  const char* moving_path;
  const char* mask_path;             /* may be NULL */
  const char* fixed_landmarks_path;  /* may be NULL */
  const char* moving_landmarks_path; /* may be NULL */
  const char* output_dir;
  bmreg_affine_config affine;
  bmreg_deformable_config deformable;
  bmreg_ssc_params ssc;
  int grid_search;
  const double* candidates;
  int candidate_count; /* -1 selects the default grid 0.1 .. 0.9 */
  int reverse;         /* nonzero swaps fixed and moving */
  double background;
  int crop_margin_voxels;
  int run_deformable;
} bmreg_pipeline_config;

BMREG_API void bmreg_ssc_params_default(bmreg_ssc_params* params);
BMREG_API void bmreg_affine_config_default(bmreg_affine_config* config);
BMREG_API void bmreg_deformable_config_default(bmreg_deformable_config* config);
BMREG_API void bmreg_pipeline_config_default(bmreg_pipeline_config* config);

/* ---- operations ---- */
/* diagnostics_csv may be NULL. */
BMREG_API bmreg_status bmreg_register_affine(const bmreg_volume* fixed, const bmreg_volume* moving,
                                             const bmreg_affine_config* config, double affine[16],
                                             char** diagnostics_csv);
BMREG_API bmreg_status bmreg_register_deformable(const bmreg_volume* fixed, const bmreg_volume* moving,
                                                 const bmreg_volume* roi, const bmreg_deformable_config* config,
                                                 bmreg_field** out, char** diagnostics_csv);
/* Resamples moving onto the grid of target. */
BMREG_API bmreg_status bmreg_apply_affine(const bmreg_volume* moving, const double affine[16],
                                          const bmreg_volume* target, bmreg_interpolation interp,
                                          double background, bmreg_volume** out);
BMREG_API bmreg_status bmreg_apply_field(const bmreg_volume* moving, const bmreg_field* field,
                                         bmreg_interpolation interp, double background, bmreg_volume** out);
/* Field of the map x -> affine(x + field(x)). */
BMREG_API bmreg_status bmreg_compose_affine_field(const double affine[16], const bmreg_field* field,
                                                  bmreg_field** out);
/* mask and params may be NULL. */
BMREG_API bmreg_status bmreg_ssc_mse(const bmreg_volume* fixed, const bmreg_volume* moving,
                                     const bmreg_volume* mask, const bmreg_ssc_params* params, double* out);
/* field, per_landmark and affine_only may be NULL; the arrays hold count entries. */
BMREG_API bmreg_status bmreg_compute_tre(const bmreg_landmarks* fixed, const bmreg_landmarks* moving,
                                         const double affine[16], const bmreg_field* field, double* mean,
                                         double* per_landmark, int* affine_only, size_t count);
/* scores and ok may be NULL; they hold candidate_count entries. */
BMREG_API bmreg_status bmreg_grid_search(const bmreg_volume* fixed, const bmreg_volume* moving,
                                         const bmreg_affine_config* config, const double* candidates,
                                         size_t candidate_count, const bmreg_volume* mask,
                                         const bmreg_ssc_params* params, double* best_proportion,
                                         double* scores, int* ok);
BMREG_API bmreg_status bmreg_jacobian(const bmreg_field* field, bmreg_volume** out);
BMREG_API bmreg_status bmreg_crop_to_mask(const bmreg_volume* volume, const bmreg_volume* mask,
                                          int64_t margin_voxels, bmreg_volume** out);

/* Every configuration problem, one per line; *problems is NULL when there are none. */
BMREG_API bmreg_status bmreg_pipeline_check(const bmreg_pipeline_config* config, char** problems);
/* report_json may be NULL. */
BMREG_API bmreg_status bmreg_run_pipeline(const bmreg_pipeline_config* config, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* BMREG_BMREG_H */

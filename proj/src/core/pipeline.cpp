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
#include "pipeline.hpp"

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "nifti_io.hpp"
#include "resample.hpp"
#include "version.hpp"

namespace bmreg {

namespace fs = std::filesystem;

std::vector<std::string> PipelineConfig::problems() const {
  std::vector<std::string> out;
  auto need_file = [&](const std::string& path, const char* what) {
    if (path.empty()) {
      out.push_back(std::string(what) + " path is required");
    } else if (!fs::is_regular_file(path)) {
      out.push_back(std::string(what) + " not found: " + path);
    }
  };
  need_file(fixed_path, "fixed image");
  need_file(moving_path, "moving image");
  if (!mask_path.empty()) need_file(mask_path, "mask");
  if (fixed_landmarks_path.empty() != moving_landmarks_path.empty()) {
    out.emplace_back("landmarks need both a fixed and a moving file");
  } else if (!fixed_landmarks_path.empty()) {
    need_file(fixed_landmarks_path, "fixed landmarks");
    need_file(moving_landmarks_path, "moving landmarks");
  }
  if (output_dir.empty()) {
    out.emplace_back("output directory is required");
  } else if (fs::exists(output_dir) && !fs::is_directory(output_dir)) {
    out.push_back("output path is not a directory: " + output_dir);
  }
  auto collect = [&](auto&& check) {
    try {
      check();
    } catch (const Error& e) {
      out.emplace_back(e.what());
    }
  };
  collect([&] { affine.validate(); });
  if (run_deformable) collect([&] { deformable.validate(); });
  collect([&] { ssc.validate(); });
  if (grid_search) {
    if (candidates.empty()) out.emplace_back("grid search requested with an empty candidate list");
    for (double p : candidates)
      if (!(p > 0.0 && p <= 1.0)) out.push_back("grid search candidate out of (0, 1]: " + std::to_string(p));
  }
  if (crop_margin_voxels < 0) out.emplace_back("crop margin must be >= 0");
  if (!std::isfinite(background)) out.emplace_back("background must be finite");
  return out;
}

namespace {

nlohmann::json tre_json(const TreResult& tre) {
  nlohmann::json j;
  j["mean_mm"] = tre.mean_mm;
  j["per_landmark_mm"] = tre.per_landmark_mm;
  std::vector<int> flags;
  for (std::size_t i = 0; i < tre.affine_only.size(); ++i)
    if (tre.affine_only[i]) flags.push_back(static_cast<int>(i));
  j["affine_only_landmarks"] = flags;
  return j;
}

Mask load_roi(const PipelineConfig& config, const Volume& fixed) {
  if (config.mask_path.empty()) return Mask(fixed.grid(), true);
  Mask m = read_mask(config.mask_path);
  if (m.grid().matches(fixed.grid())) return m;
  return apply_affine(m, AffineTransform(), fixed.grid());
}

}  // namespace

std::string render_report_json(const PipelineResult& result) {
  nlohmann::json j;
  j["tool"] = "bmreg";
  j["version"] = kVersionString;
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) rows.push_back({result.affine.matrix()(r, 0), result.affine.matrix()(r, 1),
                                              result.affine.matrix()(r, 2), result.affine.matrix()(r, 3)});
  j["affine"] = rows;

  nlohmann::json phases = nlohmann::json::array();
  for (const auto& p : result.phases) {
    nlohmann::json e;
    e["phase"] = phase_name(p.phase);
    e["ssc_mse"] = p.ssc_mse;
    e["tre"] = p.tre ? tre_json(*p.tre) : nlohmann::json(nullptr);
    phases.push_back(e);
  }
  j["phases"] = phases;

  nlohmann::json aff = nlohmann::json::array();
  for (const auto& it : result.affine_diagnostics.iterations) {
    aff.push_back({{"level", it.level},
                   {"spacing_mm", it.spacing_mm},
                   {"iteration", it.iteration},
                   {"active_blocks", it.active_blocks},
                   {"correspondences", it.correspondences},
                   {"inliers", it.inliers},
                   {"initial_trimmed_rms_mm", it.initial_trimmed_rms_mm},
                   {"trimmed_rms_mm", it.trimmed_rms_mm},
                   {"motion_mm", it.motion_mm},
                   {"lts_iterations", it.lts_iterations},
                   {"lts_converged", it.lts_converged}});
  }
  j["affine_iterations"] = aff;

  nlohmann::json def = nlohmann::json::array();
  for (const auto& it : result.deformable_diagnostics.iterations) {
    def.push_back({{"level", it.level},
                   {"spacing_mm", it.spacing_mm},
                   {"iteration", it.iteration},
                   {"objective", it.objective},
                   {"step_mm", it.step_mm}});
  }
  j["deformable_iterations"] = def;

  if (result.grid_search) {
    nlohmann::json gs;
    gs["best_proportion"] = result.grid_search->best_proportion;
    gs["best_ssc_mse"] = result.grid_search->best_score;
    nlohmann::json table = nlohmann::json::array();
    for (const auto& e : result.grid_search->table) {
      nlohmann::json row{{"proportion", e.proportion}, {"ok", e.ok}};
      row["ssc_mse"] = e.ok ? nlohmann::json(e.ssc_mse) : nlohmann::json(nullptr);
      if (!e.ok) row["error"] = e.error;
      table.push_back(row);
    }
    gs["table"] = table;
    j["grid_search"] = gs;
  }
  return j.dump(2) + "\n";
}

std::string render_grid_search_csv(const GridSearchResult& result) {
  std::ostringstream out;
  out << "proportion,ssc_mse,status\n";
  for (const auto& e : result.table) {
    out << format_number(e.proportion) << ',';
    if (e.ok) {
      out << format_number(e.ssc_mse) << ",ok\n";
    } else {
      out << ",failed\n";
    }
  }
  return out.str();
}

std::string render_affine_diagnostics_csv(const AffineDiagnostics& diagnostics) {
  std::ostringstream out;
  out << "level,spacing_mm,iteration,active_blocks,correspondences,inliers,initial_trimmed_rms_mm,"
         "trimmed_rms_mm,motion_mm,lts_iterations,lts_converged\n";
  for (const auto& it : diagnostics.iterations) {
    out << it.level << ',' << format_number(it.spacing_mm) << ',' << it.iteration << ',' << it.active_blocks << ','
        << it.correspondences << ',' << it.inliers << ',' << format_number(it.initial_trimmed_rms_mm) << ','
        << format_number(it.trimmed_rms_mm) << ',' << format_number(it.motion_mm) << ',' << it.lts_iterations << ','
        << (it.lts_converged ? 1 : 0) << '\n';
  }
  return out.str();
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  const std::vector<std::string> problems = config.problems();
  if (!problems.empty()) {
    std::string msg = "invalid pipeline configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    fail(ErrorKind::Validation, msg);
  }
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory " + config.output_dir + ": " + ec.message());

  const bool reverse = config.direction == Direction::Reverse;
  const Volume fixed = read_volume(reverse ? config.moving_path : config.fixed_path);
  const Volume moving = read_volume(reverse ? config.fixed_path : config.moving_path);
  const Mask roi = load_roi(config, fixed);
  if (roi.count() == 0) fail(ErrorKind::Validation, "mask is empty on the fixed grid");
  const Mask* metric_mask = config.mask_path.empty() ? nullptr : &roi;

  std::optional<LandmarkSet> fixed_lm, moving_lm;
  if (!config.fixed_landmarks_path.empty()) {
    fixed_lm = read_landmarks(reverse ? config.moving_landmarks_path : config.fixed_landmarks_path);
    moving_lm = read_landmarks(reverse ? config.fixed_landmarks_path : config.moving_landmarks_path);
    if (fixed_lm->size() != moving_lm->size())
      fail(ErrorKind::Validation, "landmark files have different counts");
  }

  PipelineResult result;
  AffineStageConfig affine_cfg = config.affine;
  affine_cfg.background = config.background;
  if (config.grid_search) {
    result.grid_search = grid_search_proportion(fixed, moving, affine_cfg, config.candidates, metric_mask, config.ssc);
    affine_cfg.lts.inlier_proportion = result.grid_search->best_proportion;
  }
  auto [affine, affine_diag] = register_affine(fixed, moving, affine_cfg);
  result.affine = affine;
  result.affine_diagnostics = std::move(affine_diag);

  DisplacementField field = DisplacementField::zero(fixed.grid());
  if (config.run_deformable) {
    const Volume warped_affine =
        apply_affine(moving, result.affine, fixed.grid(), Interpolation::Trilinear, config.background);
    const CropBox box = mask_bounding_box(roi, config.crop_margin_voxels);
    auto [cropped_field, deform_diag] =
        register_deformable(crop(fixed, box), crop(warped_affine, box), crop(roi, box), config.deformable);
    field = embed_field(cropped_field, fixed.grid(), box);
    result.deformable_diagnostics = std::move(deform_diag);
  }
  const DisplacementField total = compose_affine_then_field(result.affine, field);
  const Volume warped = apply_field(moving, total, Interpolation::Trilinear, config.background);

  PhaseInputs inputs;
  inputs.fixed = &fixed;
  inputs.moving = &moving;
  inputs.affine = result.affine;
  inputs.field = config.run_deformable ? &field : nullptr;
  inputs.mask = metric_mask;
  inputs.fixed_landmarks = fixed_lm ? &*fixed_lm : nullptr;
  inputs.moving_landmarks = moving_lm ? &*moving_lm : nullptr;
  inputs.ssc = config.ssc;
  inputs.background = config.background;
  result.phases = run_phase_report(inputs);
  result.report_json = render_report_json(result);

  const fs::path out(config.output_dir);
  write_affine(result.affine, (out / "affine.txt").string());
  write_field(field, (out / "field.nii.gz").string());
  write_field(total, (out / "total_field.nii.gz").string());
  write_volume(warped, (out / "warped.nii.gz").string());
  for (const auto& p : result.phases)
    write_volume(p.difference, (out / (std::string("diff_") + phase_name(p.phase) + ".nii.gz")).string());
  write_text_file((out / "report.json").string(), result.report_json);
  write_text_file((out / "affine_iterations.csv").string(), render_affine_diagnostics_csv(result.affine_diagnostics));
  if (result.grid_search)
    write_text_file((out / "gridsearch.csv").string(), render_grid_search_csv(*result.grid_search));
  return result;
}

}  // namespace bmreg

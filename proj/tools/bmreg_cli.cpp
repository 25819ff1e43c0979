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
// bmreg command-line front end. Talks to the library only through the C API.

#include <bmreg/bmreg.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace {

namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kValidation = 1, kRuntime = 2, kIo = 3 };

int exit_code(bmreg_status s) {
  switch (s) {
    case BMREG_OK: return kOk;
    case BMREG_ERR_VALIDATION:
    case BMREG_ERR_NULL_ARGUMENT: return kValidation;
    case BMREG_ERR_IO:
    case BMREG_ERR_PARSE: return kIo;
    default: return kRuntime;
  }
}

struct Failure {
  int code;
};

void check(bmreg_status s, const std::string& stage) {
  if (s == BMREG_OK) return;
  std::cerr << "bmreg: " << stage << " failed (" << bmreg_status_name(s) << "): " << bmreg_last_error() << "\n";
  throw Failure{exit_code(s)};
}

std::string number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eni") == std::string::npos) s += ".0";
  return s;
}

template <class T, void (*Free)(T*)>
class Handle {
public:
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p_); }
  T** out() { return &p_; }
  T* get() const { return p_; }

private:
  T* p_ = nullptr;
};
using Volume = Handle<bmreg_volume, bmreg_volume_free>;
using Field = Handle<bmreg_field, bmreg_field_free>;
using Landmarks = Handle<bmreg_landmarks, bmreg_landmarks_free>;
using CString = Handle<char, bmreg_string_free>;

class Problems {
public:
  void require(const std::string& value, const std::string& flag) {
    if (value.empty()) list_.push_back(flag + " is required");
  }
  void file(const std::string& path, const std::string& flag, bool required = true) {
    if (path.empty()) {
      if (required) list_.push_back(flag + " is required");
    } else if (!fs::is_regular_file(path)) {
      list_.push_back(flag + ": file not found: " + path);
    }
  }
  void add(bool ok, const std::string& message) {
    if (!ok) list_.push_back(message);
  }
  void raise() const {
    if (list_.empty()) return;
    std::cerr << "bmreg: invalid arguments:\n";
    for (const auto& p : list_) std::cerr << "  " << p << "\n";
    throw Failure{kValidation};
  }

private:
  std::vector<std::string> list_;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "bmreg: cannot write " << path << "\n";
    throw Failure{kIo};
  }
}

void read_volume(const std::string& path, Volume& v, const char* what) {
  check(bmreg_volume_read(path.c_str(), v.out()), std::string("reading ") + what);
}

// ---- option groups ----------------------------------------------------------

struct AffineOptions {
  std::vector<double> levels;
  std::vector<int> iterations;
  int block_size;
  double active_fraction;
  int search_radius;
  int search_stride;
  double inlier_proportion;
  int lts_max_iterations;
  double lts_tol;
  std::string init = "center";
  std::string init_affine;

  AffineOptions() {
    bmreg_affine_config d;
    bmreg_affine_config_default(&d);
    levels.assign(d.level_spacing_mm, d.level_spacing_mm + d.level_count);
    iterations.assign(d.level_iterations, d.level_iterations + d.level_count);
    block_size = d.block_size;
    active_fraction = d.active_fraction;
    search_radius = d.search_radius;
    search_stride = d.search_stride;
    inlier_proportion = d.inlier_proportion;
    lts_max_iterations = d.lts_max_iterations;
    lts_tol = d.lts_tolerance_mm;
  }

  void add(CLI::App* app) {
    auto* g = app->add_option_group("Affine stage");
    g->add_option("--levels", levels, "Affine pyramid spacings in mm, coarse to fine")->delimiter(',');
    g->add_option("--iterations", iterations, "Block-matching iterations per affine level")->delimiter(',');
    g->add_option("--block-size", block_size, "Block edge length in voxels");
    g->add_option("--active-fraction", active_fraction, "Fraction of highest-variance blocks matched");
    g->add_option("--search-radius", search_radius, "Block search half-width in voxels");
    g->add_option("--search-stride", search_stride, "Block search step in voxels");
    g->add_option("--inlier-proportion", inlier_proportion, "LTS proportion of pairs kept");
    g->add_option("--lts-max-iterations", lts_max_iterations, "LTS refit limit");
    g->add_option("--lts-tol", lts_tol, "LTS convergence tolerance in mm");
    g->add_option("--init", init, "Initializer: center, identity or given");
    g->add_option("--init-affine", init_affine, "Affine text file used with --init given");
  }

  void validate(Problems& p) const {
    p.add(!levels.empty() && levels.size() <= BMREG_MAX_LEVELS, "--levels needs 1 to 8 spacings");
    p.add(iterations.size() == levels.size(), "--iterations needs one entry per level");
    for (std::size_t l = 0; l < levels.size(); ++l) {
      p.add(levels[l] > 0.0, "--levels entries must be > 0");
      if (l > 0) p.add(levels[l] < levels[l - 1], "--levels must be strictly decreasing");
    }
    for (int it : iterations) p.add(it >= 1, "--iterations entries must be >= 1");
    p.add(block_size >= 2, "--block-size must be >= 2");
    p.add(active_fraction > 0.0 && active_fraction <= 1.0, "--active-fraction must be in (0, 1]");
    p.add(search_radius >= 0, "--search-radius must be >= 0");
    p.add(search_stride >= 1, "--search-stride must be >= 1");
    p.add(inlier_proportion > 0.0 && inlier_proportion <= 1.0, "--inlier-proportion must be in (0, 1]");
    p.add(lts_max_iterations >= 1, "--lts-max-iterations must be >= 1");
    p.add(lts_tol > 0.0, "--lts-tol must be > 0");
    p.add(init == "center" || init == "identity" || init == "given", "--init must be center, identity or given");
    if (init == "given") p.file(init_affine, "--init-affine");
  }

  bmreg_affine_config config() const {
    bmreg_affine_config c;
    bmreg_affine_config_default(&c);
    c.level_count = static_cast<int>(levels.size());
    for (std::size_t l = 0; l < levels.size(); ++l) {
      c.level_spacing_mm[l] = levels[l];
      c.level_iterations[l] = iterations[l];
    }
    c.block_size = block_size;
    c.active_fraction = active_fraction;
    c.search_radius = search_radius;
    c.search_stride = search_stride;
    c.inlier_proportion = inlier_proportion;
    c.lts_max_iterations = lts_max_iterations;
    c.lts_tolerance_mm = lts_tol;
    if (init == "identity") c.initializer = BMREG_INIT_IDENTITY;
    if (init == "given") {
      c.initializer = BMREG_INIT_GIVEN;
      check(bmreg_affine_read(init_affine.c_str(), c.initial), "reading --init-affine");
    }
    return c;
  }
};

struct SscOptions {
  int radius;
  int step;
  double epsilon;

  SscOptions() {
    bmreg_ssc_params d;
    bmreg_ssc_params_default(&d);
    radius = d.patch_radius;
    step = d.neighbor_step;
    epsilon = d.epsilon;
  }
  void add(CLI::App* app) {
    auto* g = app->add_option_group("SSC descriptor");
    g->add_option("--ssc-radius", radius, "SSC patch half-width in voxels");
    g->add_option("--ssc-step", step, "SSC neighbor distance in voxels");
    g->add_option("--ssc-epsilon", epsilon, "SSC variance floor factor");
  }
  void validate(Problems& p) const {
    p.add(radius >= 0, "--ssc-radius must be >= 0");
    p.add(step >= 1, "--ssc-step must be >= 1");
    p.add(epsilon > 0.0, "--ssc-epsilon must be > 0");
  }
  bmreg_ssc_params params() const { return {radius, step, epsilon}; }
};

struct DeformOptions {
  double smoothness;
  std::vector<double> levels;
  int iterations;
  double step_size;
  std::string similarity = "ssc";
  int ncc_radius;

  DeformOptions() {
    bmreg_deformable_config d;
    bmreg_deformable_config_default(&d);
    smoothness = d.smoothness;
    levels.assign(d.level_spacing_mm, d.level_spacing_mm + d.level_count);
    iterations = d.iterations_per_level;
    step_size = d.step_size_mm;
    ncc_radius = d.ncc_radius;
  }
  void add(CLI::App* app) {
    auto* g = app->add_option_group("Deformable stage");
    g->add_option("--smoothness", smoothness, "Field regularization; Gaussian sigma = 2 x smoothness voxels");
    g->add_option("--deform-levels", levels, "Deformable spacings in mm, coarse to fine")->delimiter(',');
    g->add_option("--deform-iterations", iterations, "Iterations per deformable level");
    g->add_option("--step-size", step_size, "Largest per-voxel update in mm");
    g->add_option("--similarity", similarity, "Deformable similarity: ssc or ncc");
    g->add_option("--ncc-radius", ncc_radius, "Local NCC window half-width in voxels");
  }
  void validate(Problems& p) const {
    p.add(smoothness >= 0.0, "--smoothness must be >= 0");
    p.add(!levels.empty() && levels.size() <= BMREG_MAX_LEVELS, "--deform-levels needs 1 to 8 spacings");
    for (std::size_t l = 0; l < levels.size(); ++l) {
      p.add(levels[l] > 0.0, "--deform-levels entries must be > 0");
      if (l > 0) p.add(levels[l] < levels[l - 1], "--deform-levels must be strictly decreasing");
    }
    p.add(iterations >= 1, "--deform-iterations must be >= 1");
    p.add(step_size > 0.0, "--step-size must be > 0");
    p.add(similarity == "ssc" || similarity == "ncc", "--similarity must be ssc or ncc");
    p.add(ncc_radius >= 1, "--ncc-radius must be >= 1");
  }
  bmreg_deformable_config config(const SscOptions& ssc) const {
    bmreg_deformable_config c;
    bmreg_deformable_config_default(&c);
    c.smoothness = smoothness;
    c.level_count = static_cast<int>(levels.size());
    for (std::size_t l = 0; l < levels.size(); ++l) c.level_spacing_mm[l] = levels[l];
    c.iterations_per_level = iterations;
    c.step_size_mm = step_size;
    c.similarity = similarity == "ncc" ? BMREG_SIM_LOCAL_NCC : BMREG_SIM_SSC_SSD;
    c.ssc = ssc.params();
    c.ncc_radius = ncc_radius;
    return c;
  }
};

const char* kDefaultCandidates = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";

// "0.1,0.2" -> {0.1, 0.2}; "" -> {}.
bool parse_candidates(const std::string& text, std::vector<double>& out) {
  out.clear();
  std::stringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    const auto b = token.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    token = token.substr(b, token.find_last_not_of(" \t") - b + 1);
    double v = 0.0;
    const auto r = std::from_chars(token.data(), token.data() + token.size(), v);
    if (r.ec != std::errc() || r.ptr != token.data() + token.size()) return false;
    out.push_back(v);
  }
  return true;
}

void candidate_problems(Problems& p, const std::string& text, std::vector<double>& out) {
  if (!parse_candidates(text, out)) {
    p.add(false, "--candidates must be comma separated numbers");
    return;
  }
  p.add(!out.empty(), "grid search requested with an empty --candidates list");
  for (double c : out) p.add(c > 0.0 && c <= 1.0, "--candidates entry out of (0, 1]: " + number(c));
}

// ---- commands ---------------------------------------------------------------

struct PipelineCmd {
  std::string fixed, moving, mask, fixed_landmarks, moving_landmarks, output;
  AffineOptions affine;
  DeformOptions deform;
  SscOptions ssc;
  bool grid_search = false;
  std::string candidates = kDefaultCandidates;
  std::string direction = "forward";
  double background = 0.0;
  int crop_margin = 4;
  bool no_deformable = false;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("pipeline", "Affine and deformable registration, warping and phase report");
    c->add_option("--fixed", fixed, "Fixed image (NIfTI)");
    c->add_option("--moving", moving, "Moving image (NIfTI)");
    c->add_option("--mask", mask, "ROI mask on the fixed grid (NIfTI)");
    c->add_option("--fixed-landmarks", fixed_landmarks, "Fixed landmark CSV");
    c->add_option("--moving-landmarks", moving_landmarks, "Moving landmark CSV");
    c->add_option("-o,--output", output, "Output directory");
    c->add_flag("--grid-search", grid_search, "Select the LTS inlier proportion by grid search");
    c->add_option("--candidates", candidates, "Grid search proportions, comma separated");
    c->add_option("--direction", direction, "forward, or reverse to swap fixed and moving");
    c->add_option("--background", background, "Intensity outside the moving image");
    c->add_option("--crop-margin", crop_margin, "Margin in voxels around the mask crop");
    c->add_flag("--no-deformable", no_deformable, "Stop after the affine stage");
    affine.add(c);
    deform.add(c);
    ssc.add(c);
    c->callback([this] { run(); });
  }

  void run() {
    Problems p;
    p.file(fixed, "--fixed");
    p.file(moving, "--moving");
    p.file(mask, "--mask", false);
    p.add(fixed_landmarks.empty() == moving_landmarks.empty(),
          "--fixed-landmarks and --moving-landmarks go together");
    p.file(fixed_landmarks, "--fixed-landmarks", false);
    p.file(moving_landmarks, "--moving-landmarks", false);
    p.require(output, "--output");
    std::vector<double> cand;
    if (grid_search) candidate_problems(p, candidates, cand);
    p.add(direction == "forward" || direction == "reverse", "--direction must be forward or reverse");
    p.add(crop_margin >= 0, "--crop-margin must be >= 0");
    affine.validate(p);
    if (!no_deformable) deform.validate(p);
    ssc.validate(p);
    p.raise();

    bmreg_pipeline_config c;
    bmreg_pipeline_config_default(&c);
    c.fixed_path = fixed.c_str();
    c.moving_path = moving.c_str();
    c.mask_path = mask.empty() ? nullptr : mask.c_str();
    c.fixed_landmarks_path = fixed_landmarks.empty() ? nullptr : fixed_landmarks.c_str();
    c.moving_landmarks_path = moving_landmarks.empty() ? nullptr : moving_landmarks.c_str();
    c.output_dir = output.c_str();
    c.affine = affine.config();
    c.deformable = deform.config(ssc);
    c.ssc = ssc.params();
    c.grid_search = grid_search ? 1 : 0;
    if (grid_search) {
      c.candidates = cand.data();
      c.candidate_count = static_cast<int>(cand.size());
    }
    c.reverse = direction == "reverse" ? 1 : 0;
    c.background = background;
    c.crop_margin_voxels = crop_margin;
    c.run_deformable = no_deformable ? 0 : 1;

    CString report;
    check(bmreg_run_pipeline(&c, report.out()), "pipeline");
    const auto j = nlohmann::json::parse(report.get());
    std::cout << "phase,ssc_mse,tre_mean_mm\n";
    for (const auto& ph : j["phases"]) {
      std::cout << ph["phase"].get<std::string>() << ',' << number(ph["ssc_mse"].get<double>()) << ',';
      if (!ph["tre"].is_null()) std::cout << number(ph["tre"]["mean_mm"].get<double>());
      std::cout << '\n';
    }
    std::cout << "outputs written to " << output << "\n";
  }
};

struct AffineCmd {
  std::string fixed, moving, output, diagnostics;
  AffineOptions affine;
  double background = 0.0;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("affine", "Block-matching affine registration");
    c->add_option("--fixed", fixed, "Fixed image (NIfTI)");
    c->add_option("--moving", moving, "Moving image (NIfTI)");
    c->add_option("-o,--output", output, "Affine text file to write");
    c->add_option("--diagnostics", diagnostics, "Per-iteration CSV to write");
    c->add_option("--background", background, "Intensity outside the moving image");
    affine.add(c);
    c->callback([this] { run(); });
  }

  void run() {
    Problems p;
    p.file(fixed, "--fixed");
    p.file(moving, "--moving");
    p.require(output, "--output");
    affine.validate(p);
    p.raise();
    Volume f, m;
    read_volume(fixed, f, "--fixed");
    read_volume(moving, m, "--moving");
    bmreg_affine_config c = affine.config();
    c.background = background;
    double t[16];
    CString diag;
    check(bmreg_register_affine(f.get(), m.get(), &c, t, diagnostics.empty() ? nullptr : diag.out()),
          "affine registration");
    check(bmreg_affine_write(t, output.c_str()), "writing --output");
    if (!diagnostics.empty()) write_text(diagnostics, diag.get());
    for (int r = 0; r < 4; ++r)
      std::cout << number(t[4 * r]) << ' ' << number(t[4 * r + 1]) << ' ' << number(t[4 * r + 2]) << ' '
                << number(t[4 * r + 3]) << '\n';
  }
};

struct DeformCmd {
  std::string fixed, moving, roi, output, diagnostics;
  DeformOptions deform;
  SscOptions ssc;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("deform", "Masked deformable registration of affinely aligned images");
    c->add_option("--fixed", fixed, "Fixed image (NIfTI)");
    c->add_option("--moving", moving, "Moving image already on the fixed grid (NIfTI)");
    c->add_option("--roi", roi, "ROI mask on the fixed grid (NIfTI)");
    c->add_option("-o,--output", output, "Displacement field to write (NIfTI)");
    c->add_option("--diagnostics", diagnostics, "Per-iteration CSV to write");
    deform.add(c);
    ssc.add(c);
    c->callback([this] { run(); });
  }

  void run() {
    Problems p;
    p.file(fixed, "--fixed");
    p.file(moving, "--moving");
    p.file(roi, "--roi");
    p.require(output, "--output");
    deform.validate(p);
    ssc.validate(p);
    p.raise();
    Volume f, m, r;
    read_volume(fixed, f, "--fixed");
    read_volume(moving, m, "--moving");
    read_volume(roi, r, "--roi");
    const bmreg_deformable_config c = deform.config(ssc);
    Field field;
    CString diag;
    check(bmreg_register_deformable(f.get(), m.get(), r.get(), &c, field.out(),
                                    diagnostics.empty() ? nullptr : diag.out()),
          "deformable registration");
    check(bmreg_field_write(field.get(), output.c_str()), "writing --output");
    if (!diagnostics.empty()) write_text(diagnostics, diag.get());
    double mag = 0.0;
    check(bmreg_field_max_magnitude(field.get(), &mag), "field summary");
    std::cout << "max_displacement_mm," << number(mag) << '\n';
  }
};

struct WarpCmd {
  std::string moving, reference, affine, field, output, interp = "linear";
  double background = 0.0;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("warp", "Resample an image through an affine and/or displacement field");
    c->add_option("--moving", moving, "Image to resample (NIfTI)");
    c->add_option("--reference", reference, "Output grid for affine-only warps (default: the moving grid)");
    c->add_option("--affine", affine, "Affine text file (default: identity)");
    c->add_option("--field", field, "Displacement field; its grid is the output grid");
    c->add_option("-o,--output", output, "Warped image to write (NIfTI)");
    c->add_option("--interp", interp, "linear or nearest");
    c->add_option("--background", background, "Intensity outside the moving image");
    c->callback([this] { run(); });
  }

  void run() {
    Problems p;
    p.file(moving, "--moving");
    p.file(reference, "--reference", false);
    p.file(affine, "--affine", false);
    p.file(field, "--field", false);
    p.require(output, "--output");
    p.add(interp == "linear" || interp == "nearest", "--interp must be linear or nearest");
    p.add(field.empty() || reference.empty(), "--reference and --field are exclusive; the field grid is the output grid");
    p.raise();
    const bmreg_interpolation mode = interp == "nearest" ? BMREG_NEAREST : BMREG_TRILINEAR;
    double t[16] = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
    if (!affine.empty()) check(bmreg_affine_read(affine.c_str(), t), "reading --affine");
    Volume m, out;
    read_volume(moving, m, "--moving");
    if (!field.empty()) {
      Field f, total;
      check(bmreg_field_read(field.c_str(), f.out()), "reading --field");
      check(bmreg_compose_affine_field(t, f.get(), total.out()), "composition");
      check(bmreg_apply_field(m.get(), total.get(), mode, background, out.out()), "warp");
    } else {
      Volume ref;
      if (!reference.empty()) read_volume(reference, ref, "--reference");
      check(bmreg_apply_affine(m.get(), t, reference.empty() ? m.get() : ref.get(), mode, background, out.out()),
            "warp");
    }
    check(bmreg_volume_write(out.get(), output.c_str()), "writing --output");
  }
};

struct SscCmd {
  std::string fixed, moving, mask;
  SscOptions ssc;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("ssc", "SSC-MSE between two images on the same grid");
    c->add_option("--fixed", fixed, "Fixed image (NIfTI)");
    c->add_option("--moving", moving, "Moving image on the fixed grid (NIfTI)");
    c->add_option("--mask", mask, "Restrict the mean to this mask (NIfTI)");
    ssc.add(c);
    c->callback([this] { run(); });
  }

  void run() {
    Problems p;
    p.file(fixed, "--fixed");
    p.file(moving, "--moving");
    p.file(mask, "--mask", false);
    ssc.validate(p);
    p.raise();
    Volume f, m, k;
    read_volume(fixed, f, "--fixed");
    read_volume(moving, m, "--moving");
    if (!mask.empty()) read_volume(mask, k, "--mask");
    const bmreg_ssc_params params = ssc.params();
    double value = 0.0;
    check(bmreg_ssc_mse(f.get(), m.get(), k.get(), &params, &value), "SSC-MSE");
    std::cout << number(value) << '\n';
  }
};

struct TreCmd {
  std::string fixed_landmarks, moving_landmarks, affine, field;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("tre", "Landmark target registration error");
    c->add_option("--fixed-landmarks", fixed_landmarks, "Fixed landmark CSV");
    c->add_option("--moving-landmarks", moving_landmarks, "Moving landmark CSV");
    c->add_option("--affine", affine, "Affine text file (default: identity)");
    c->add_option("--field", field, "Displacement field on the fixed grid");
    c->callback([this] { run(); });
  }

  void run() {
    Problems p;
    p.file(fixed_landmarks, "--fixed-landmarks");
    p.file(moving_landmarks, "--moving-landmarks");
    p.file(affine, "--affine", false);
    p.file(field, "--field", false);
    p.raise();
    double t[16] = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
    if (!affine.empty()) check(bmreg_affine_read(affine.c_str(), t), "reading --affine");
    Landmarks fl, ml;
    check(bmreg_landmarks_read(fixed_landmarks.c_str(), fl.out()), "reading --fixed-landmarks");
    check(bmreg_landmarks_read(moving_landmarks.c_str(), ml.out()), "reading --moving-landmarks");
    Field f;
    if (!field.empty()) check(bmreg_field_read(field.c_str(), f.out()), "reading --field");
    const std::size_t n = bmreg_landmarks_count(fl.get());
    std::vector<double> per(n);
    std::vector<int> flags(n);
    double mean = 0.0;
    check(bmreg_compute_tre(fl.get(), ml.get(), t, f.get(), &mean, per.data(), flags.data(), n), "TRE");
    std::cout << "landmark,tre_mm,affine_only\n";
    for (std::size_t i = 0; i < n; ++i) std::cout << i << ',' << number(per[i]) << ',' << flags[i] << '\n';
    std::cout << "mean," << number(mean) << ",\n";
  }
};

struct GridSearchCmd {
  std::string fixed, moving, mask, output, candidates = kDefaultCandidates;
  AffineOptions affine;
  SscOptions ssc;
  double background = 0.0;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("gridsearch", "Score LTS inlier proportions by post-affine SSC-MSE");
    c->add_option("--fixed", fixed, "Fixed image (NIfTI)");
    c->add_option("--moving", moving, "Moving image (NIfTI)");
    c->add_option("--mask", mask, "Score inside this mask on the fixed grid (NIfTI)");
    c->add_option("--candidates", candidates, "Proportions to try, comma separated");
    c->add_option("-o,--output", output, "CSV table to write");
    c->add_option("--background", background, "Intensity outside the moving image");
    affine.add(c);
    ssc.add(c);
    c->callback([this] { run(); });
  }

  void run() {
    Problems p;
    p.file(fixed, "--fixed");
    p.file(moving, "--moving");
    p.file(mask, "--mask", false);
    std::vector<double> cand;
    candidate_problems(p, candidates, cand);
    affine.validate(p);
    ssc.validate(p);
    p.raise();
    Volume f, m, k;
    read_volume(fixed, f, "--fixed");
    read_volume(moving, m, "--moving");
    if (!mask.empty()) read_volume(mask, k, "--mask");
    bmreg_affine_config c = affine.config();
    c.background = background;
    const bmreg_ssc_params params = ssc.params();
    std::vector<double> scores(cand.size());
    std::vector<int> ok(cand.size());
    double best = 0.0;
    check(bmreg_grid_search(f.get(), m.get(), &c, cand.data(), cand.size(), k.get(), &params, &best, scores.data(),
                            ok.data()),
          "grid search");
    std::ostringstream table;
    table << "proportion,ssc_mse,status\n";
    for (std::size_t i = 0; i < cand.size(); ++i)
      table << number(cand[i]) << ',' << (ok[i] ? number(scores[i]) : "") << ',' << (ok[i] ? "ok" : "failed") << '\n';
    if (!output.empty()) write_text(output, table.str());
    std::cout << table.str() << "best_proportion," << number(best) << ",\n";
  }
};

struct JacobianCmd {
  std::string field, output;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("jacobian", "Jacobian determinant map of a displacement field");
    c->add_option("--field", field, "Displacement field (NIfTI)");
    c->add_option("-o,--output", output, "Determinant image to write (NIfTI)");
    c->callback([this] { run(); });
  }

  void run() {
    Problems p;
    p.file(field, "--field");
    p.raise();
    Field f;
    check(bmreg_field_read(field.c_str(), f.out()), "reading --field");
    Volume det;
    check(bmreg_jacobian(f.get(), det.out()), "Jacobian");
    int64_t dims[3];
    check(bmreg_volume_dims(det.get(), dims), "Jacobian");
    std::vector<double> values(static_cast<std::size_t>(dims[0] * dims[1] * dims[2]));
    check(bmreg_volume_copy_data(det.get(), values.data(), values.size()), "Jacobian");
    std::size_t positive = 0;
    double lowest = values.empty() ? 0.0 : values[0];
    for (double v : values) {
      positive += v > 0.0 ? 1 : 0;
      lowest = std::min(lowest, v);
    }
    if (!output.empty()) check(bmreg_volume_write(det.get(), output.c_str()), "writing --output");
    std::cout << "min_determinant," << number(lowest) << '\n'
              << "positive_fraction," << number(static_cast<double>(positive) / static_cast<double>(values.size()))
              << '\n';
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bmreg: block-matching multimodal 3D registration"};
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", bmreg_version());
  app.set_config("--config", "", "Read options from a TOML/INI file; flags override it");
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads, 0 = all cores")->envname("BMREG_THREADS");
  app.require_subcommand(1);

  PipelineCmd pipeline;
  AffineCmd affine;
  DeformCmd deform;
  WarpCmd warp;
  SscCmd ssc;
  TreCmd tre;
  GridSearchCmd gridsearch;
  JacobianCmd jacobian;
  pipeline.add(app);
  affine.add(app);
  deform.add(app);
  warp.add(app);
  ssc.add(app);
  tre.add(app);
  gridsearch.add(app);
  jacobian.add(app);
  app.parse_complete_callback([&] {
    if (threads < 0) {
      std::cerr << "bmreg: invalid arguments:\n  --threads must be >= 0\n";
      throw Failure{kValidation};
    }
    check(bmreg_set_threads(threads), "thread setup");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    std::cerr << "bmreg: " << e.what() << "\n";
    return kIo;
  } catch (const CLI::Error& e) {
    std::cerr << "bmreg: " << e.what() << "\n";
    return kValidation;
  } catch (const Failure& f) {
    return f.code;
  }
  return kOk;
}

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
// Acceptance run: one PASS/FAIL line per criterion on synthetic phantoms.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "affine_pipeline.hpp"
#include "deformable.hpp"
#include "evaluation.hpp"
#include "lts.hpp"
#include "nifti_io.hpp"
#include "oracles.hpp"
#include "phantoms.hpp"
#include "pipeline.hpp"
#include "resample.hpp"
#include "ssc.hpp"

using namespace bmreg;
using namespace bmreg::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("bmreg_accept_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

bool zero_outside(const DisplacementField& f, const Mask& roi) {
  for (std::size_t i = 0; i < f.vectors().size(); ++i)
    if (!roi.data()[i] && (f.vectors()[i].array() != 0.0).any()) return false;
  return true;
}

double positive_jacobian_fraction(const DisplacementField& f) {
  const Volume j = jacobian_determinants(f);
  std::size_t pos = 0;
  for (double d : j.data()) pos += d > 0.0 ? 1 : 0;
  return static_cast<double>(pos) / static_cast<double>(j.data().size());
}

// Shared by criteria 1 and 4.
struct AffineTrials {
  int recovered = 0;
  int ordered = 0;
  int total = 0;
  double worst_error = 0.0;
  double slowest_s = 0.0;
};

AffineTrials run_affine_trials() {
  const Grid g = Grid::from_spacing({96, 96, 96}, Vec3(1, 1, 1));
  std::mt19937_64 rng(20240601);
  AffineTrials out;
  for (int t = 0; t < 20; ++t) {
    const auto start = std::chrono::steady_clock::now();
    const PaddedTexture tex = padded_texture(g, 30.0, {3.0}, 1000 + static_cast<std::uint64_t>(t));
    const AffineTransform truth = random_affine(rng, 10.0, 10.0, 0.05, g.world_center());
    const Volume fixed = sample_through(tex.source, AffineTransform(), g);
    const Volume moving = sample_through(tex.source, truth.inverse(), g);
    const auto [est, diag] = register_affine(fixed, moving, AffineStageConfig{});
    const double err = max_corner_error(est, truth, g);
    out.worst_error = std::max(out.worst_error, err);
    out.recovered += err < 0.5 ? 1 : 0;
    const double original = ssc_mse(fixed, moving, nullptr, SscParams{});
    const double affine = ssc_mse(fixed, apply_affine(moving, est, g), nullptr, SscParams{});
    out.ordered += original > affine ? 1 : 0;
    ++out.total;
    out.slowest_s =
        std::max(out.slowest_s, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return out;
}

Outcome criterion1(const AffineTrials& a) {
  return {a.recovered >= 19, fmt("%.0f/20 trials under 0.5 mm max corner error, worst %.3f mm, slowest trial %.1f s",
                                 a.recovered, a.worst_error, a.slowest_s)};
}

Outcome criterion2() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> pt(-40.0, 40.0);
  std::uniform_real_distribution<double> extra(0.0, 50.0);
  std::normal_distribution<double> n(0.0, 1.0);
  int robust_ok = 0, plain_fail = 0;
  double robust_worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    Mat4 m = Mat4::Identity();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m(r, c) += 0.2 * u(rng);
      m(r, 3) = 10.0 * u(rng);
    }
    const AffineTransform truth(m);
    CorrespondenceSet set;
    for (int i = 0; i < 100; ++i) {
      const Vec3 p(pt(rng), pt(rng), pt(rng));
      Vec3 q = truth.apply(p);
      if (i < 30) q += (50.0 + extra(rng)) * Vec3(n(rng), n(rng), n(rng)).normalized();
      set.pairs.push_back({p, q, 1.0});
    }
    std::shuffle(set.pairs.begin(), set.pairs.end(), rng);
    LtsParams robust;
    robust.inlier_proportion = 0.6;
    LtsParams plain;
    plain.inlier_proportion = 1.0;
    const double e_robust = (fit_affine_lts(set, robust).first.matrix() - m).cwiseAbs().maxCoeff();
    const double e_plain = (fit_affine_lts(set, plain).first.matrix() - m).cwiseAbs().maxCoeff();
    robust_worst = std::max(robust_worst, e_robust);
    robust_ok += e_robust <= 1e-4 ? 1 : 0;
    plain_fail += e_plain > 1e-4 ? 1 : 0;
  }
  return {robust_ok == 100 && plain_fail >= 90,
          fmt("proportion 0.6 within 1e-4 in %.0f/100 (worst %.2e); proportion 1.0 outside 1e-4 in %.0f/100",
              robust_ok, robust_worst, plain_fail)};
}

Outcome criterion3() {
  const Grid g = Grid::from_spacing({9, 9, 9}, Vec3(1, 1, 1));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  double oracle_worst = 0.0, rescale_worst = 0.0;
  bool flags_match = true, self_zero = true;
  for (int t = 0; t < 20; ++t) {
    Volume v(g);
    for (double& x : v.data()) x = n(rng);
    const SscDescriptor d = compute_ssc(v, SscParams{});
    const SscOracle o = brute_force_ssc(v, SscParams{});
    oracle_worst = std::max(oracle_worst, max_abs_diff(d.channels(), o.channels));
    flags_match = flags_match && d.degenerate_flags() == o.degenerate;
    Volume scaled(g);
    for (std::size_t i = 0; i < v.data().size(); ++i) scaled.data()[i] = 3.0 * v.data()[i] + 10.0;
    rescale_worst = std::max(rescale_worst, max_abs_diff(d.channels(), compute_ssc(scaled, SscParams{}).channels()));
    self_zero = self_zero && ssc_mse(v, v, nullptr, SscParams{}) == 0.0;
  }
  return {oracle_worst <= 1e-12 && flags_match && rescale_worst <= 1e-9 && self_zero,
          fmt("oracle max diff %.2e on 20 volumes, rescale (3x+10) max diff %.2e, ssc_mse(A,A)==0: ",
              oracle_worst, rescale_worst) +
              (self_zero ? "yes" : "no")};
}

struct BumpRuns {
  BumpPhantom phantom;
  DisplacementField field;
  DisplacementField stiff;
  DisplacementField corner;
  Mask corner_roi;
  double affine_mse = 0.0;
  double deformable_mse = 0.0;
};

BumpRuns run_bump() {
  BumpRuns b{bump_phantom(), DisplacementField::zero(Grid::from_spacing({1, 1, 1}, Vec3(1, 1, 1))),
             DisplacementField::zero(Grid::from_spacing({1, 1, 1}, Vec3(1, 1, 1))),
             DisplacementField::zero(Grid::from_spacing({1, 1, 1}, Vec3(1, 1, 1))),
             Mask(Grid::from_spacing({1, 1, 1}, Vec3(1, 1, 1)))};
  const BumpPhantom& p = b.phantom;
  b.field = register_deformable(p.fixed, p.moving, p.roi, DeformableConfig{}).first;
  b.affine_mse = ssc_mse(p.fixed, p.moving, &p.roi, SscParams{});
  b.deformable_mse = ssc_mse(p.fixed, apply_field(p.moving, b.field), &p.roi, SscParams{});
  DeformableConfig stiff;
  stiff.smoothness = 100.0;
  b.stiff = register_deformable(p.fixed, p.moving, p.roi, stiff).first;
  const Grid& g = p.fixed.grid();
  b.corner_roi = sphere_mask(g, g.world_from_voxel(Vec3(8, 8, 8)), 8.0);
  b.corner = register_deformable(p.fixed, p.moving, b.corner_roi, DeformableConfig{}).first;
  return b;
}

Outcome criterion4(const AffineTrials& a, const BumpRuns& b) {
  const double ratio = b.deformable_mse / b.affine_mse;
  return {a.ordered == a.total && ratio <= 0.5,
          fmt("original > post-affine in %.0f/%.0f trials; bump ROI SSC-MSE %.4f -> %.4f", a.ordered, a.total,
              b.affine_mse, b.deformable_mse) +
              fmt(" (ratio %.3f)", ratio)};
}

Outcome criterion5(const BumpRuns& b) {
  const bool zero = zero_outside(b.field, b.phantom.roi) && zero_outside(b.stiff, b.phantom.roi) &&
                    zero_outside(b.corner, b.corner_roi);
  const double positive = positive_jacobian_fraction(b.field);
  const double stiff_max = b.stiff.max_magnitude();
  return {zero && positive >= 0.99 && stiff_max < 0.1,
          std::string("zero outside ROI: ") + (zero ? "yes" : "no") +
              fmt(", positive Jacobian %.4f, smoothness 100 max |u| %.2e mm", positive, stiff_max)};
}

Outcome criterion6() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> pt(-30.0, 30.0);
  std::normal_distribution<double> n(0.0, 1.0);
  const Grid g = Grid::from_spacing({16, 16, 16}, Vec3(2, 2, 2), Vec3(-15, -15, -15));
  const Mat4 to_index = g.voxel_to_world().inverse();
  auto apply = [](const Mat4& m, const Vec3& p) {
    Vec3 out;
    for (int r = 0; r < 3; ++r) out[r] = m(r, 0) * p[0] + m(r, 1) * p[1] + m(r, 2) * p[2] + m(r, 3);
    return out;
  };
  auto dist = [](const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
  };
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    Mat4 m = Mat4::Identity();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) m(r, c) += u(rng) * (c == 3 ? 10.0 : 0.2);
    LandmarkSet f, mv;
    for (int i = 0; i < 5; ++i) {
      f.points.emplace_back(pt(rng), pt(rng), pt(rng));
      mv.points.emplace_back(pt(rng), pt(rng), pt(rng));
    }
    const bool with_field = t % 2 == 1;
    std::vector<Vec3> vecs(static_cast<std::size_t>(g.voxel_count()));
    std::array<Volume, 3> comp{Volume(g), Volume(g), Volume(g)};
    if (with_field) {
      for (std::size_t i = 0; i < vecs.size(); ++i) {
        vecs[i] = Vec3(n(rng), n(rng), n(rng));
        for (int a = 0; a < 3; ++a) comp[static_cast<std::size_t>(a)].data()[i] = vecs[i][a];
      }
    }
    const DisplacementField field(g, vecs);
    const TreResult r = compute_tre(f, mv, AffineTransform(m), with_field ? &field : nullptr);
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      Vec3 x = f.points[i];
      const Vec3 idx = apply(to_index, x);
      const bool inside = idx[0] >= 0 && idx[1] >= 0 && idx[2] >= 0 && idx[0] <= 15 && idx[1] <= 15 && idx[2] <= 15;
      if (with_field && inside)
        for (int a = 0; a < 3; ++a) x[a] += trilinear_oracle(comp[static_cast<std::size_t>(a)], idx[0], idx[1], idx[2]);
      const double d = dist(apply(m, x), mv.points[i]);
      worst = std::max(worst, std::abs(r.per_landmark_mm[i] - d));
      sum += d;
    }
    worst = std::max(worst, std::abs(r.mean_mm - sum / 5.0));
  }

  // A regression from the affine to the deformable phase must show up in the report.
  PipelineResult pr;
  const Grid one = Grid::from_spacing({1, 1, 1}, Vec3(1, 1, 1));
  pr.phases.push_back({Phase::Original, 0.3, TreResult{5.0, {5.0}, {false}}, Volume(one)});
  pr.phases.push_back({Phase::Affine, 0.2, TreResult{1.60, {1.60}, {false}}, Volume(one)});
  pr.phases.push_back({Phase::Deformable, 0.1, TreResult{2.38, {2.38}, {false}}, Volume(one)});
  const auto j = nlohmann::json::parse(render_report_json(pr));
  const bool rendered = j["phases"][1]["phase"] == "affine" && j["phases"][1]["tre"]["mean_mm"] == 1.60 &&
                        j["phases"][2]["phase"] == "deformable" && j["phases"][2]["tre"]["mean_mm"] == 2.38;
  return {worst <= 1e-9 && rendered,
          fmt("max deviation from oracle %.2e mm over 1000 draws; per-phase TRE in report: ", worst) +
              (rendered ? "affine 1.60, deformable 2.38" : "missing")};
}

Outcome criterion7() {
  TempDir dir;
  const Grid g = Grid::from_spacing({48, 48, 48}, Vec3(1, 1, 1));
  const PaddedTexture tex = padded_texture(g, 15.0, {2.0}, 71);
  const AffineTransform truth = make_affine(Vec3(0, 0, 3), Vec3(1.02, 1.0, 0.98), Vec3(1.5, -1.0, 0.5), g.world_center());
  const DisplacementField bump = bump_field(g, g.world_center(), 2.0, 6.0, Vec3(1, 0, 1));
  write_volume(sample_through_field(tex.source, bump), dir.file("fixed.nii.gz"));
  write_volume(sample_through(tex.source, truth.inverse(), g), dir.file("moving.nii.gz"));
  write_mask(sphere_mask(g, g.world_center(), 18.0), dir.file("mask.nii.gz"));
  LandmarkSet fl, ml;
  for (const Vec3& d : {Vec3(0, 0, 0), Vec3(8, -4, 3), Vec3(-6, 5, -2), Vec3(4, 9, -7)}) {
    const Vec3 x = g.world_center() + d;
    fl.points.push_back(x);
    ml.points.push_back(truth.apply(x));
  }
  write_landmarks(fl, dir.file("fixed.csv"));
  write_landmarks(ml, dir.file("moving.csv"));
  const std::string args = " pipeline --fixed " + dir.file("fixed.nii.gz") + " --moving " + dir.file("moving.nii.gz") +
                           " --mask " + dir.file("mask.nii.gz") + " --fixed-landmarks " + dir.file("fixed.csv") +
                           " --moving-landmarks " + dir.file("moving.csv") + " --deform-iterations 20";
  const std::string cli = std::string("\"") + BMREG_CLI + "\"";
  const int c1 = run_command(cli + " --threads 1" + args + " -o " + dir.file("t1") + " >/dev/null");
  const int c8 = run_command(cli + " --threads 8" + args + " -o " + dir.file("t8") + " >/dev/null");
  if (c1 != 0 || c8 != 0) return {false, fmt("pipeline exit codes %.0f and %.0f", c1, c8)};
  std::vector<std::string> compared, differing;
  for (const auto& entry : fs::directory_iterator(dir.path / "t1")) {
    const std::string name = entry.path().filename().string();
    compared.push_back(name);
    if (slurp(entry.path()) != slurp(dir.path / "t8" / name)) differing.push_back(name);
  }
  const bool core = fs::exists(dir.path / "t1" / "affine.txt") && fs::exists(dir.path / "t1" / "field.nii.gz") &&
                    fs::exists(dir.path / "t1" / "report.json");
  std::string detail = std::to_string(compared.size()) + " output files byte-identical between 1 and 8 threads";
  if (!differing.empty()) {
    detail = "differing outputs:";
    for (const auto& d : differing) detail += " " + d;
  }
  return {core && differing.empty() && compared.size() >= 3, detail};
}

Outcome criterion8() {
  TempDir dir;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 100.0);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::vector<std::string> failures;
  auto geometry_error = [](const Grid& a, const Grid& b) {
    return (a.voxel_to_world() - b.voxel_to_world()).cwiseAbs().maxCoeff();
  };
  auto float_ok = [](std::span<const double> a, std::span<const double> b) {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (static_cast<double>(static_cast<float>(a[i])) != b[i]) return false;
    return true;
  };

  Grid oblique = Grid::from_spacing({8, 8, 8}, Vec3(1, 1, 1));
  {
    Mat4 m = make_affine(Vec3(10, -20, 30), Vec3(0.9, 1.3, 2.1), Vec3(-12.5, 40.25, 7.0), Vec3::Zero()).matrix();
    oblique = Grid({8, 8, 8}, m);
  }
  Volume v(oblique);
  for (double& x : v.data()) x = n(rng);
  for (const char* name : {"v.nii", "v.nii.gz"}) {
    write_volume(v, dir.file(name));
    const Volume back = read_volume(dir.file(name));
    if (geometry_error(v.grid(), back.grid()) > 1e-5 || !float_ok(v.data(), back.data()))
      failures.push_back(std::string("volume ") + name);
  }
  const Volume aniso(Grid::from_spacing({6, 5, 4}, Vec3(0.5, 1.0, 2.0), Vec3(3, -2, 1)), 1.5);
  write_volume(aniso, dir.file("aniso.nii.gz"));
  const Vec3 spacing = read_volume(dir.file("aniso.nii.gz")).grid().spacing();
  if ((spacing - Vec3(0.5, 1.0, 2.0)).cwiseAbs().maxCoeff() > 1e-5) failures.push_back("anisotropic spacing");

  std::vector<Vec3> vecs(static_cast<std::size_t>(oblique.voxel_count()));
  for (auto& x : vecs) x = Vec3(n(rng), n(rng), n(rng)) * 0.01;
  const DisplacementField field(oblique, vecs);
  write_field(field, dir.file("f.nii.gz"));
  const DisplacementField fback = read_field(dir.file("f.nii.gz"));
  bool field_ok = geometry_error(field.grid(), fback.grid()) <= 1e-5;
  for (std::size_t i = 0; i < vecs.size() && field_ok; ++i)
    for (int a = 0; a < 3; ++a)
      field_ok = field_ok && static_cast<double>(static_cast<float>(vecs[i][a])) == fback.vectors()[i][a];
  if (!field_ok) failures.push_back("field");

  Mat4 am = Mat4::Identity();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) am(r, c) += u(rng) / 7.0;
  write_affine(AffineTransform(am), dir.file("a.txt"));
  if (read_affine(dir.file("a.txt")).matrix() != am) failures.push_back("affine text");

  LandmarkSet l;
  for (int i = 0; i < 10; ++i) l.points.emplace_back(u(rng), u(rng), u(rng));
  write_landmarks(l, dir.file("l.csv"));
  const LandmarkSet lback = read_landmarks(dir.file("l.csv"));
  bool lm_ok = lback.size() == l.size();
  for (std::size_t i = 0; lm_ok && i < l.size(); ++i) lm_ok = (lback.points[i] - l.points[i]).cwiseAbs().maxCoeff() <= 1e-6;
  if (!lm_ok) failures.push_back("landmarks");

  // External check with nibabel: geometry and data as it sees them.
  std::string external = "nibabel not run";
#ifdef BMREG_PYTHON
  {
    std::ofstream script(dir.file("check.py"));
    script << "import sys, nibabel as nib, numpy as np\n"
              "img = nib.load(sys.argv[1])\n"
              "a = img.affine\n"
              "d = np.asarray(img.dataobj, dtype=np.float64)\n"
              "with open(sys.argv[2], 'w') as f:\n"
              "    f.write(' '.join(repr(float(x)) for x in a.ravel()) + '\\n')\n"
              "    f.write(' '.join(str(s) for s in d.shape) + '\\n')\n"
              "    f.write(' '.join(repr(float(x)) for x in d.ravel(order='F')) + '\\n')\n";
  }
  const int code = run_command(std::string("\"") + BMREG_PYTHON + "\" " + dir.file("check.py") + " " +
                               dir.file("v.nii.gz") + " " + dir.file("nib.txt") + " 2>" + dir.file("nib_err.txt"));
  if (code != 0) {
    external = "nibabel load failed: " + slurp(dir.path / "nib_err.txt");
    failures.push_back("nibabel");
  } else {
    std::ifstream in(dir.file("nib.txt"));
    Mat4 nm;
    for (int i = 0; i < 16; ++i) in >> nm(i / 4, i % 4);
    std::int64_t dims[3];
    in >> dims[0] >> dims[1] >> dims[2];
    std::vector<double> data(static_cast<std::size_t>(dims[0] * dims[1] * dims[2]));
    for (double& x : data) in >> x;
    const double geo = (nm - oblique.voxel_to_world()).cwiseAbs().maxCoeff();
    const bool same_shape = dims[0] == 8 && dims[1] == 8 && dims[2] == 8;
    const bool same_data = same_shape && float_ok(v.data(), data);
    external = fmt("nibabel affine max diff %.1e", geo) + (same_shape && same_data ? ", data identical" : ", data differs");
    if (geo > 1e-5 || !same_data) failures.push_back("nibabel");
  }
#else
  failures.push_back("nibabel (no Python interpreter configured)");
#endif
  std::string detail = "volume, anisotropic spacing, field, affine, landmark round-trips; " + external;
  if (!failures.empty()) {
    detail += "; failed:";
    for (const auto& f : failures) detail += " " + f;
  }
  return {failures.empty(), detail};
}

void report(int id, const char* name, const Outcome& o, int& failed) {
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << o.detail << std::endl;
  failed += o.pass ? 0 : 1;
}

Outcome guarded(const std::function<Outcome()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main() {
  int failed = 0;
  AffineTrials trials;
  BumpRuns bump = run_bump();
  const Outcome c1 = guarded([&] {
    trials = run_affine_trials();
    return criterion1(trials);
  });
  report(1, "affine recovery", c1, failed);
  report(2, "LTS robustness", guarded(criterion2), failed);
  report(3, "SSC correctness", guarded(criterion3), failed);
  report(4, "phase-report monotonicity",
         trials.total > 0 ? guarded([&] { return criterion4(trials, bump); }) : Outcome{false, "affine trials did not run"},
         failed);
  report(5, "deformable contract", guarded([&] { return criterion5(bump); }), failed);
  report(6, "TRE oracle equivalence", guarded(criterion6), failed);
  report(7, "determinism", guarded(criterion7), failed);
  report(8, "format round-trips", guarded(criterion8), failed);
  return failed == 0 ? 0 : 1;
}

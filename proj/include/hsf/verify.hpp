// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Oracle checks run by `hsf verify` and the acceptance binary. Each check compares the engine
// against a brute-force or closed-form reference and reports pass/fail with a short detail.
#pragma once

#include "hsf/alignment.hpp"
#include "hsf/bvh.hpp"
#include "hsf/deformation.hpp"
#include "hsf/fixtures.hpp"
#include "hsf/marching_cubes.hpp"
#include "hsf/renderer.hpp"
#include "hsf/schedules.hpp"

#include <chrono>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace hsf {

struct CheckResult {
  int id = 0;
  std::string name;
  std::string suite;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyContext {
  /// Fixture directory; generated assets are used when it is empty or incomplete.
  std::string data_dir;
  int threads = 0;

  const Fixtures& fixtures() const {
    if (!cache_) cache_ = std::make_shared<Fixtures>(load_or_generate_fixtures(data_dir));
    return *cache_;
  }

 private:
  mutable std::shared_ptr<Fixtures> cache_;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

inline TriangleMesh random_soup(std::mt19937_64& rng, int faces) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> small(-0.15, 0.15);
  TriangleMesh m;
  while (static_cast<int>(m.num_faces()) < faces) {
    const Vec3 c(u(rng), u(rng), u(rng));
    const Vec3 a = c + Vec3(small(rng), small(rng), small(rng));
    const Vec3 b = c + Vec3(small(rng), small(rng), small(rng));
    const Vec3 d = c + Vec3(small(rng), small(rng), small(rng));
    if (0.5 * (b - a).cross(d - a).norm() < 1e-6) continue;
    const auto base = static_cast<std::uint32_t>(m.vertices.size());
    m.vertices.insert(m.vertices.end(), {a, b, d});
    m.faces.push_back({base, base + 1, base + 2});
  }
  return m;
}

/// Random surface points pushed off the surface by up to shell in each coordinate.
inline std::vector<Vec3> near_surface_points(const TriangleMesh& mesh, std::uint64_t seed, std::size_t n,
                                             double shell) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> face(0, mesh.num_faces() - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> off(-shell, shell);
  std::vector<Vec3> out;
  out.reserve(n);
  while (out.size() < n) {
    const auto t = mesh.triangle(face(rng));
    double a = u(rng), b = u(rng);
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    out.push_back(t[0] + a * (t[1] - t[0]) + b * (t[2] - t[0]) + Vec3(off(rng), off(rng), off(rng)));
  }
  return out;
}

inline std::vector<RaySample> constant_ray(int n, double sigma, const Vec3& f, double t0, double t1) {
  std::vector<RaySample> s(n);
  const double h = (t1 - t0) / n;
  for (int i = 0; i < n; ++i) s[i] = {t0 + (i + 0.5) * h, {f, sigma}};
  return s;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// 1
inline Outcome check_camera_sphere(const VerifyContext&) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> mu(-kPi, kPi);
  std::uniform_real_distribution<double> nu(1e-3, kPi - 1e-3);
  const CameraConfig cfg;
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const CameraParams c = camera_from_spherical(mu(rng), nu(rng), cfg);
    worst = std::max(worst, std::abs((c.center() - cfg.lookat).norm() - 2.7));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-6 && t < 1.0, "max |r - 2.7| = " + fmt(worst) + ", " + fmt(t) + " s"};
}

inline std::shared_ptr<const RiggedTemplate> single_bone(const VerifyContext& ctx) {
  return std::make_shared<const RiggedTemplate>(rebind_to_single_joint(*ctx.fixtures().rig, joint_names::kNeck));
}

// 2
inline Outcome check_compact_support(const VerifyContext& ctx) {
  const auto t0 = Clock::now();
  const BodyPose pose{Vec3(0.2, 0.6, -0.1), Vec3(0.1, 0.3, 0.0)};
  const DeformationContext def(ctx.fixtures().rig, pose, DeformationConfig{});
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  int tested = 0;
  int nonzero = 0;
  while (tested < 100000) {
    const Vec3 x(u(rng), u(rng), u(rng));
    if (def.bvh().closest_face(x)->distance < 0.25) continue;
    ++tested;
    if (def.deform_local_frame(x) != Vec3::Zero()) ++nonzero;
  }
  const double t = seconds_since(t0);
  return {nonzero == 0 && t < 10.0,
          std::to_string(nonzero) + " nonzero of " + std::to_string(tested) + ", " + fmt(t) + " s"};
}

// 3
inline Outcome check_identity(const VerifyContext& ctx) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts(100000);
  for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
  double worst = 0.0;
  for (DeformMode mode : {DeformMode::baseline_eq10, DeformMode::local_frame_eq11}) {
    DeformationConfig cfg;
    cfg.mode = mode;
    const DeformationContext def(ctx.fixtures().rig, BodyPose{}, cfg);
    const auto warped = def.warp_points(pts, ctx.threads);
    for (std::size_t i = 0; i < pts.size(); ++i) worst = std::max(worst, (warped[i] - pts[i]).norm());
  }
  const double t = seconds_since(t0);
  return {worst < 1e-9 && t < 10.0, "max |dx| = " + fmt(worst) + ", " + fmt(t) + " s"};
}

// 4
inline Outcome check_rigid_consistency(const VerifyContext& ctx) {
  const auto rig = single_bone(ctx);
  const Vec3 pivot = rig->joints[rig->joint_index(joint_names::kNeck)].position;
  double worst = 0.0;
  int tested = 0;
  for (double deg : {30.0, 60.0, 90.0}) {
    const BodyPose pose{Vec3(0.0, deg * kPi / 180.0, 0.0), Vec3::Zero()};
    const DeformationContext def(rig, pose, DeformationConfig{});
    const Mat3 r = rotation_from_axis_angle(pose.neck);
    int kept = 0;
    std::uint64_t seed = 400 + static_cast<std::uint64_t>(deg);
    while (kept < 10000) {
      for (const Vec3& x : near_surface_points(def.posed().mesh, seed++, 2000, 0.2)) {
        if (kept == 10000 || def.bvh().closest_face(x)->distance >= 0.25) continue;
        ++kept;
        worst = std::max(worst, (def.warp_point(x) - (r.transpose() * (x - pivot) + pivot)).norm());
      }
    }
    tested += kept;
  }
  return {worst < 1e-6, "max error " + fmt(worst) + " over " + std::to_string(tested) + " points"};
}

// 5
inline Outcome check_bvh_oracle(const VerifyContext&) {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(-1.3, 1.3);
  double worst = 0.0;
  double speedup = 0.0;
  for (int faces : {10, 700, 5000}) {
    const TriangleMesh mesh = random_soup(rng, faces);
    const FaceBVH bvh(mesh);
    std::vector<Vec3> qs(10000);
    for (auto& q : qs) q = Vec3(u(rng), u(rng), u(rng));
    std::vector<double> fast(qs.size()), slow(qs.size());
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < qs.size(); ++i) fast[i] = bvh.closest_face(qs[i])->distance;
    const double t_bvh = seconds_since(t0);
    const auto t1 = Clock::now();
    for (std::size_t i = 0; i < qs.size(); ++i) slow[i] = closest_face_exhaustive(mesh, qs[i]).distance;
    const double t_brute = seconds_since(t1);
    for (std::size_t i = 0; i < qs.size(); ++i) worst = std::max(worst, std::abs(fast[i] - slow[i]));
    if (faces == 5000) speedup = t_brute / std::max(t_bvh, 1e-9);
  }
  return {worst <= 1e-9 && speedup >= 10.0, "max |d - d_brute| = " + fmt(worst) + ", speedup " + fmt(speedup) + "x"};
}

// 6
inline Outcome check_quadrature(const VerifyContext&) {
  const double t0 = 2.25, t1 = 3.3;
  const double sigma = 2.0;
  const Vec3 f(0.2, 0.5, 0.8);
  const double exact = 1.0 - std::exp(-sigma * (t1 - t0));
  const QuadratureResult r = quadrature(constant_ray(256, sigma, f, t0, t1), t1);
  const double err256 = std::max(std::abs(r.mask - exact), (r.color - f * exact).cwiseAbs().maxCoeff());
  bool halving = true;
  std::string ratios;
  double prev = std::abs(quadrature(constant_ray(64, sigma, f, t0, t1), t1).mask - exact);
  for (int n : {128, 256, 512}) {
    const double err = std::abs(quadrature(constant_ray(n, sigma, f, t0, t1), t1).mask - exact);
    halving &= err <= 0.5 * prev;
    ratios += (ratios.empty() ? "" : "/") + fmt(prev / err);
    prev = err;
  }
  return {err256 < 1e-3 && halving, "error at 256 = " + fmt(err256) + ", doubling ratios " + ratios};
}

// 7
inline Outcome check_compositing(const VerifyContext&) {
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int w = 17, h = 13;
  Image raw(w, h, 3), bg(w, h, 3), mask(w, h, 1);
  for (double& v : raw.data) v = u(rng);
  for (double& v : bg.data) v = u(rng);
  for (double& v : mask.data) v = u(rng);
  const bool zero_ok = composite(Image(w, h, 3), Image(w, h, 1, 0.0), bg) == bg;
  const bool one_ok = composite(raw, Image(w, h, 1, 1.0), bg) == raw;
  const Image c = composite(raw, mask, bg);
  double worst = 0.0;
  for (std::size_t p = 0; p < mask.data.size(); ++p) {
    for (int k = 0; k < 3; ++k) {
      const double e = (1.0 - mask.data[p]) * bg.data[p * 3 + k] + raw.data[p * 3 + k];
      worst = std::max(worst, std::abs(c.data[p * 3 + k] - e));
    }
  }
  return {zero_ok && one_ok && worst <= 1e-12, std::string("mask=0 ") + (zero_ok ? "exact" : "WRONG") + ", mask=1 " +
                                                   (one_ok ? "exact" : "WRONG") + ", random max error " + fmt(worst)};
}

// 8
inline Outcome check_mirror_symmetry(const VerifyContext& ctx) {
  const Fixtures& fx = ctx.fixtures();
  RenderConfig cfg;
  cfg.resolution = 64;
  cfg.upsample_factor = 1;
  cfg.threads = ctx.threads;
  double worst = 0.0;
  for (double mu : {0.5, 1.3, 2.4, -1.1}) {
    const CameraParams c = camera_from_spherical(mu, 1.4);
    const Image a = render(fx.field, fx.rig, BodyPose{}, c, cfg).composed;
    const Image b = render(fx.field, fx.rig, BodyPose{}, flip_camera(c), cfg).composed;
    worst = std::max(worst, max_abs_difference(a, mirror_horizontal(b)));
  }
  return {worst < 1e-5, "max pixel difference " + fmt(worst) + " over 4 cameras"};
}

// 9
inline Outcome check_ablation(const VerifyContext& ctx) {
  const Fixtures& fx = ctx.fixtures();
  const CameraParams cam = camera_from_spherical(kPi / 2, kPi / 2);
  RenderConfig eq10;
  eq10.resolution = 64;
  eq10.upsample_factor = 1;
  eq10.threads = ctx.threads;
  eq10.deformation.mode = DeformMode::baseline_eq10;
  RenderConfig eq11 = eq10;
  eq11.deformation.mode = DeformMode::local_frame_eq11;
  const BodyPose p_n{Vec3(0.0, kPi / 2, 0.0), Vec3::Zero()};
  const double posed = mean_abs_difference(render(fx.field, fx.rig, p_n, cam, eq10).composed,
                                           render(fx.field, fx.rig, p_n, cam, eq11).composed);
  const double neutral = max_abs_difference(render(fx.field, fx.rig, BodyPose{}, cam, eq10).composed,
                                            render(fx.field, fx.rig, BodyPose{}, cam, eq11).composed);
  return {posed > 0.01 && neutral < 1e-9,
          "mean L1 at p_n = " + fmt(posed) + ", max difference at p = 0 is " + fmt(neutral)};
}

// 10
inline Outcome check_schedule_table(const VerifyContext&) {
  int failures = 0;
  int cells = 0;
  auto expect = [&](bool ok) {
    ++cells;
    if (!ok) ++failures;
  };
  auto m = [](double x) { return TrainingClock::millions(x); };
  struct Row {
    std::int64_t lo, hi;  // images, half-open
    int stage;
    bool preg;
    int res_lo, res_hi;
    bool frozen;
  };
  constexpr std::int64_t M = kMillion;
  // Stage table rows, probed at both ends. The first row includes 0.2M itself.
  for (const Row& r : {Row{0, M / 5 + 1, 1, true, 64, 64, false}, Row{M / 5 + 1, 6 * M, 1, false, 64, 64, false},
                       Row{6 * M, 10 * M, 2, false, 64, 64, true}, Row{10 * M, 11 * M, 3, false, 64, 128, true},
                       Row{11 * M, 13 * M + 1, 3, false, 128, 128, true}}) {
    for (const TrainingClock c : {TrainingClock{r.lo}, TrainingClock{r.hi - 1}}) {
      const StageInfo s = stage_of(c);
      expect(s.stage == r.stage);
      expect(s.preg_full_weight == r.preg);
      expect(s.gamma_g_frozen == r.frozen);
    }
    expect(neural_resolution({r.lo}) == r.res_lo);
    expect(neural_resolution({r.hi - 1}) == r.res_hi);
  }
  // Ramp values from the training-detail prose and their midpoints.
  expect(lambda_preg(m(0)) == 0.5);
  expect(lambda_preg(m(0.2)) == 0.5);
  expect(lambda_preg(m(0.3)) == 0.25);
  expect(lambda_preg(m(0.4)) == 0.0);
  expect(swap_probability(m(0)) == 1.0);
  expect(std::abs(swap_probability(m(0.5)) - 0.85) < 1e-15);
  expect(std::abs(swap_probability(m(1)) - 0.7) < 1e-15);
  expect(std::abs(swap_probability(m(13)) - 0.7) < 1e-15);
  expect(neural_resolution(m(9)) == 64);
  expect(neural_resolution(m(10.5)) == 96);
  expect(neural_resolution(m(12)) == 128);
  expect(stage_of(m(0.1)).preg_active);
  expect(!stage_of(m(0.4)).preg_active);
  expect(!stage_of(m(14)).warning.empty());
  return {failures == 0, std::to_string(cells - failures) + "/" + std::to_string(cells) + " cells match"};
}

// 11
inline Outcome check_alignment(const VerifyContext& ctx) {
  const RiggedTemplate& rig = *ctx.fixtures().rig;
  std::mt19937_64 rng(1111);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const CameraConfig cfg;
  double worst_residual = 0.0, worst_radius = 0.0, worst_camera = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const BodyPose pose{Vec3(u(rng), u(rng), u(rng)) * 0.5, Vec3(u(rng), u(rng), u(rng)) * 0.5};
    const CameraParams truth = camera_from_spherical(u(rng) * kPi, kPi / 2 + 0.7 * u(rng), cfg);
    RigidTransform motion;
    motion.rotation = rotation_from_axis_angle(Vec3(u(rng), u(rng), u(rng)) * 1.8);
    motion.translation = Vec3(u(rng), u(rng), u(rng)) * 5.0;
    motion.scale = std::exp(0.6 * u(rng));
    AlignmentInput in;
    embed_neck_head_pose(in.body, pose);
    auto joints = alignment_joints(rig, pose);
    for (auto& j : joints) j = motion.apply(j);
    in.joints = joints;
    in.fixed_camera = transform_camera(truth, motion);
    const AlignmentResult r = solve_alignment(in, rig);
    worst_residual = std::max(worst_residual, r.residual);
    worst_radius = std::max(worst_radius, std::abs((r.camera.center() - cfg.lookat).norm() - 2.7));
    worst_camera = std::max(worst_camera, (r.camera.extrinsic - truth.extrinsic).cwiseAbs().maxCoeff());
  }
  return {worst_residual < 1e-6 && worst_radius < 1e-12 && worst_camera < 1e-6,
          "max residual " + fmt(worst_residual) + ", max |r - 2.7| " + fmt(worst_radius) + ", max camera error " +
              fmt(worst_camera)};
}

// 12
inline Outcome check_isosurface(const VerifyContext& ctx) {
  AnalyticSphereField sphere;
  sphere.radius = 0.5;
  sphere.edge_width = 0.2;
  IsosurfaceOptions opt;
  opt.threads = ctx.threads;
  std::vector<double> errors;
  bool bounded = true;
  for (int res : {32, 64, 128}) {
    const TriangleMesh m = extract_isosurface([&](const Vec3& x) { return sphere.density(x); },
                                              sphere.surface_level(), res, opt);
    double worst = 0.0;
    for (const Vec3& v : m.vertices) worst = std::max(worst, std::abs(v.norm() - sphere.radius));
    if (m.vertices.empty()) worst = 1.0;
    errors.push_back(worst);
    if (res >= 64) bounded &= worst < 2.0 * (2.0 / res);
  }
  const bool halving = errors[1] <= 0.5 * errors[0] && errors[2] <= 0.5 * errors[1];
  return {bounded && halving,
          "max radial error " + fmt(errors[0]) + " / " + fmt(errors[1]) + " / " + fmt(errors[2]) + " at 32/64/128"};
}

// 13
inline Outcome check_golden(const VerifyContext& ctx) {
  const Fixtures& fx = ctx.fixtures();
  const GoldenScene scene;
  bool identical = true;
  bool golden_ok = true;
  std::string note;
  nlohmann::json golden;
  const bool have_golden = !fx.source.empty() && std::filesystem::exists(golden_path(fx.source));
  if (have_golden) {
    std::ifstream in(golden_path(fx.source));
    in >> golden;
  }
  for (int res : {64, 128}) {
    const RenderOutput one = render(fx.field, fx.rig, scene.pose, scene.camera(), scene.config(res, 1));
    const RenderOutput many = render(fx.field, fx.rig, scene.pose, scene.camera(), scene.config(res, 4));
    identical &= one.composed == many.composed && one.mask == many.mask && one.upsampled == many.upsampled;
    if (have_golden) {
      const std::string key = "composed_" + std::to_string(res);
      golden_ok &= golden.value(key, std::string()) == hash_image(one.composed);
      golden_ok &= golden.value("mask_" + std::to_string(res), std::string()) == hash_image(one.mask);
    }
  }
  note = have_golden ? (golden_ok ? ", golden hashes match" : ", golden hashes DIFFER")
                     : ", no golden file (generated assets)";
  return {identical && golden_ok,
          std::string("1 vs 4 threads ") + (identical ? "bit-identical" : "DIFFER") + " at 64 and 128" + note};
}

struct CheckSpec {
  int id;
  const char* name;
  const char* suite;
  Outcome (*run)(const VerifyContext&);
};

inline const std::vector<CheckSpec>& check_specs() {
  static const std::vector<CheckSpec> specs = {
      {1, "camera sphere constraint", "geometry", check_camera_sphere},
      {2, "deformation compact support", "deform", check_compact_support},
      {3, "deformation identity at neutral pose", "deform", check_identity},
      {4, "rigid consistency on one-bone rig", "deform", check_rigid_consistency},
      {5, "BVH matches brute force", "geometry", check_bvh_oracle},
      {6, "quadrature closed form and convergence", "render", check_quadrature},
      {7, "compositing identities", "render", check_compositing},
      {8, "mirror symmetry end to end", "render", check_mirror_symmetry},
      {9, "deformation ablation divergence", "deform", check_ablation},
      {10, "schedule table parity", "schedule", check_schedule_table},
      {11, "alignment recovery", "geometry", check_alignment},
      {12, "iso-surface convergence", "geometry", check_isosurface},
      {13, "golden render determinism", "render", check_golden},
  };
  return specs;
}

}  // namespace detail

inline const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> s = {"geometry", "deform", "render", "schedule", "all"};
  return s;
}

/// Runs every check in suite ("all" runs everything). Exceptions inside a check count as failures.
inline std::vector<CheckResult> run_checks(const std::string& suite, const VerifyContext& ctx = {},
                                           const std::function<void(const CheckResult&)>& on_result = {}) {
  if (std::find(verify_suites().begin(), verify_suites().end(), suite) == verify_suites().end()) {
    throw ValidationError("unknown verify suite '" + suite + "'");
  }
  std::vector<CheckResult> out;
  for (const auto& spec : detail::check_specs()) {
    if (suite != "all" && suite != spec.suite) continue;
    CheckResult r{spec.id, spec.name, spec.suite};
    const auto t0 = detail::Clock::now();
    try {
      const detail::Outcome o = spec.run(ctx);
      r.pass = o.pass;
      r.detail = o.detail;
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = detail::seconds_since(t0);
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string format_check(const CheckResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "[%s] %2d %-40s %7.2fs  ", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                r.seconds);
  return head + r.detail;
}

}  // namespace hsf

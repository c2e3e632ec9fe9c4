// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0

#include "hsf/deformation.hpp"

#include <gtest/gtest.h>

#include <random>

namespace hsf {
namespace {

std::shared_ptr<const RiggedTemplate> standin() {
  static const auto rig = std::make_shared<const RiggedTemplate>(generate_standin_template());
  return rig;
}

/// Minimal rig: one triangle bound to the head joint.
std::shared_ptr<const RiggedTemplate> one_triangle_rig() {
  RiggedTemplate rig;
  rig.mesh.vertices = {Vec3(-0.1, 0.2, 0.05), Vec3(0.1, 0.2, 0.05), Vec3(0.0, 0.3, 0.05)};
  rig.mesh.faces = {{0, 1, 2}};
  rig.joints = {{"pelvis", Vec3(0, -0.5, 0), -1},        {"neck", Vec3(0, 0, 0), 0},
                {"head", Vec3(0, 0.12, 0), 1},           {"left_shoulder", Vec3(0.17, -0.05, 0), 0},
                {"right_shoulder", Vec3(-0.17, -0.05, 0), 0}};
  rig.weights.assign(3, {{2, 1.0}});
  rig.validate();
  return std::make_shared<const RiggedTemplate>(std::move(rig));
}

std::vector<Vec3> random_points(std::uint64_t seed, std::size_t n, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Vec3> out(n);
  for (auto& p : out) p = Vec3(u(rng), u(rng), u(rng));
  return out;
}

/// Points sampled within `shell` of the posed surface, by offsetting random surface points.
std::vector<Vec3> near_surface_points(const TriangleMesh& mesh, std::uint64_t seed, std::size_t n, double shell,
                                      double y_min = -1e9) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> face(0, mesh.num_faces() - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> off(-shell, shell);
  std::vector<Vec3> out;
  while (out.size() < n) {
    const auto t = mesh.triangle(face(rng));
    double a = u(rng), b = u(rng);
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    const Vec3 p = t[0] + a * (t[1] - t[0]) + b * (t[2] - t[0]);
    if (p.y() < y_min) continue;
    out.push_back(p + Vec3(off(rng), off(rng), off(rng)));
  }
  return out;
}

TEST(Deformation, NeutralPoseIsIdentityInBothModes) {
  for (DeformMode mode : {DeformMode::baseline_eq10, DeformMode::local_frame_eq11}) {
    DeformationConfig cfg;
    cfg.mode = mode;
    const auto ctx = build_context(standin(), BodyPose{}, cfg);
    EXPECT_EQ(ctx.posed().mesh.vertices, standin()->mesh.vertices);
    double worst = 0.0;
    for (const Vec3& x : random_points(1, 5000, -0.8, 0.8)) worst = std::max(worst, ctx.deform(x).norm());
    for (const Vec3& x : near_surface_points(standin()->mesh, 2, 5000, 0.05)) worst = std::max(worst, ctx.deform(x).norm());
    EXPECT_LT(worst, 1e-9) << to_string(mode);
  }
}

TEST(Deformation, BaselineOnSurfaceIsFullDisplacement) {
  DeformationConfig cfg;
  cfg.mode = DeformMode::baseline_eq10;
  const BodyPose pose{Vec3(0, 0.8, 0), Vec3(0.2, 0, 0)};
  const auto ctx = build_context(standin(), pose, cfg);
  const auto& posed = ctx.posed().mesh;
  for (std::uint32_t v = 0; v < posed.num_vertices(); v += 97) {
    const Vec3 x = posed.vertices[v];
    const Vec3 dx = deform_baseline(ctx, x);
    // exp(0) = 1: the displacement carries x exactly to the canonical vertex.
    EXPECT_LT((x + dx - standin()->mesh.vertices[v]).norm(), 1e-12) << "vertex " << v;
  }
}

TEST(Deformation, BaselineAttenuationOnOneTriangle) {
  DeformationConfig cfg;
  cfg.mode = DeformMode::baseline_eq10;
  const BodyPose pose{Vec3(0.0, 0.6, 0.0), Vec3::Zero()};
  auto rig = one_triangle_rig();
  const auto ctx = build_context(rig, pose, cfg);
  const auto& posed = ctx.posed().mesh;
  const auto t = posed.triangle(0);
  const Vec3 centroid = (t[0] + t[1] + t[2]) / 3.0;
  const Vec3 n = (t[1] - t[0]).cross(t[2] - t[0]).normalized();
  const auto c0 = rig->mesh.triangle(0);
  const Vec3 canonical_centroid = (c0[0] + c0[1] + c0[2]) / 3.0;
  for (double d : {0.0, 0.1, 0.5, 1.0, 2.0}) {
    const Vec3 x = centroid + d * n;
    const Vec3 expected = (canonical_centroid - centroid) * std::exp(-d * d);
    EXPECT_LT((deform_baseline(ctx, x) - expected).norm(), 1e-12) << "d=" << d;
  }
}

TEST(Deformation, LocalFrameZeroBeyondAlpha) {
  const BodyPose pose{Vec3(0.0, 0.6, 0.0), Vec3::Zero()};
  const auto ctx = build_context(one_triangle_rig(), pose, DeformationConfig{});
  const auto t = ctx.posed().mesh.triangle(0);
  const Vec3 centroid = (t[0] + t[1] + t[2]) / 3.0;
  const Vec3 n = (t[1] - t[0]).cross(t[2] - t[0]).normalized();
  EXPECT_EQ(deform_local_frame(ctx, centroid + (0.25 + 1e-9) * n), Vec3::Zero());
  EXPECT_EQ(deform_local_frame(ctx, centroid + 0.25 * n), Vec3::Zero());
  EXPECT_NE(deform_local_frame(ctx, centroid + (0.25 - 1e-9) * n), Vec3::Zero());
}

TEST(Deformation, LocalFrameCarriesRigidVerticesToCanonical) {
  const BodyPose pose{Vec3(0.2, 0.4, 0.0), Vec3(0.1, -0.2, 0.05)};
  const auto ctx = build_context(standin(), pose, DeformationConfig{});
  const auto& rig = *standin();
  // A vertex is rigid when every face around it is bound to one joint alone.
  std::vector<bool> rigid_vertex(rig.mesh.num_vertices(), true);
  for (const auto& f : rig.mesh.faces) {
    const auto& w0 = rig.weights[f[0]];
    bool single = true;
    for (auto i : f) single &= rig.weights[i].size() == 1 && rig.weights[i][0].joint == w0[0].joint;
    if (!single) {
      for (auto i : f) rigid_vertex[i] = false;
    }
  }
  int rigid = 0;
  double worst_blend = 0.0;
  for (std::uint32_t v = 0; v < rig.mesh.num_vertices(); ++v) {
    const Vec3 x = ctx.posed().mesh.vertices[v];
    const Vec3 mapped = warp_point(ctx, x);
    if (rigid_vertex[v]) {
      ASSERT_LT((mapped - rig.mesh.vertices[v]).norm(), 1e-6) << "vertex " << v;
      ++rigid;
    } else {
      worst_blend = std::max(worst_blend, (mapped - rig.mesh.vertices[v]).norm());
    }
  }
  EXPECT_GT(rigid, 1000);
  EXPECT_LT(worst_blend, 1e-2);
}

TEST(Deformation, RigidRotationInvertsExactlyInShell) {
  auto rig = std::make_shared<const RiggedTemplate>(rebind_to_single_joint(*standin(), "neck"));
  for (double deg : {30.0, 60.0, 90.0}) {
    const BodyPose pose{Vec3(0, deg * kPi / 180.0, 0), Vec3::Zero()};
    const auto ctx = build_context(rig, pose, DeformationConfig{});
    const Mat3 r = rotation_from_axis_angle(pose.neck);
    const Vec3 pivot = Vec3::Zero();
    for (const Vec3& x : near_surface_points(ctx.posed().mesh, 3, 1000, 0.1)) {
      if (ctx.bvh().closest_face(x)->distance >= 0.25) continue;
      const Vec3 expected = r.transpose() * (x - pivot) + pivot;
      ASSERT_LT((warp_point(ctx, x) - expected).norm(), 1e-6);
    }
  }
}

TEST(Deformation, FarPointsAreFixedByLocalFrameField) {
  const auto ctx = build_context(standin(), BodyPose{Vec3(0, 1.0, 0), Vec3::Zero()}, DeformationConfig{});
  const Vec3 far(0.9, 0.9, 0.9);
  EXPECT_EQ(warp_point(ctx, far), far);
}

TEST(Deformation, CullingKeepsHeadQueriesUnchanged) {
  const BodyPose pose{Vec3(0, 0.7, 0), Vec3::Zero()};
  DeformationConfig everything;
  everything.cull_bbox = Eigen::AlignedBox3d(Vec3::Constant(-1e6), Vec3::Constant(1e6));
  const auto full = build_context(standin(), pose, everything);
  EXPECT_EQ(full.retained_faces(), standin()->mesh.num_faces());

  DeformationConfig head_only;
  head_only.cull_bbox = Eigen::AlignedBox3d(Vec3(-1, -0.3, -1), Vec3(1, 1, 1));
  const auto culled = build_context(standin(), pose, head_only);
  EXPECT_LT(culled.retained_faces(), full.retained_faces());

  for (const Vec3& x : near_surface_points(full.posed().mesh, 4, 3000, 0.05, 0.05)) {
    ASSERT_EQ(full.warp_point(x), culled.warp_point(x));
  }
}

TEST(Deformation, CullingEverythingIsAnError) {
  DeformationConfig cfg;
  cfg.cull_bbox = Eigen::AlignedBox3d(Vec3::Constant(5), Vec3::Constant(6));
  EXPECT_THROW(build_context(standin(), BodyPose{}, cfg), ValidationError);
}

TEST(Deformation, NonPositiveAlphaIsRejected) {
  DeformationConfig cfg;
  cfg.alpha = 0.0;
  EXPECT_THROW(build_context(standin(), BodyPose{}, cfg), ValidationError);
}

TEST(Deformation, BatchWarpIndependentOfThreadCount) {
  const auto ctx = build_context(standin(), BodyPose{Vec3(0.1, 0.9, 0), Vec3(0, 0.3, 0)}, DeformationConfig{});
  const auto pts = random_points(5, 20000, -0.5, 0.5);
  const auto one = ctx.warp_points(pts, 1);
  const auto four = ctx.warp_points(pts, 4);
  const auto seven = ctx.warp_points(pts, 7);
  EXPECT_EQ(one, four);
  EXPECT_EQ(one, seven);
}

TEST(Deformation, ModesDisagreeUnderQuarterTurn) {
  const BodyPose pose{Vec3(0, kPi / 2, 0), Vec3::Zero()};
  DeformationConfig base_cfg;
  base_cfg.mode = DeformMode::baseline_eq10;
  const auto base = build_context(standin(), pose, base_cfg);
  const auto local = build_context(standin(), pose, DeformationConfig{});
  double max_diff = 0.0;
  for (const Vec3& x : near_surface_points(local.posed().mesh, 6, 2000, 0.03, 0.15)) {
    max_diff = std::max(max_diff, (base.warp_point(x) - local.warp_point(x)).norm());
  }
  EXPECT_GT(max_diff, 0.01);
}

TEST(Deformation, ParseMode) {
  EXPECT_EQ(parse_deform_mode("eq10"), DeformMode::baseline_eq10);
  EXPECT_EQ(parse_deform_mode("eq11"), DeformMode::local_frame_eq11);
  EXPECT_THROW(parse_deform_mode("eq12"), ValidationError);
}

}  // namespace
}  // namespace hsf

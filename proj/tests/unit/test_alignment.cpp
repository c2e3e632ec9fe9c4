// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0

#include "hsf/alignment.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace hsf {
namespace {

const RiggedTemplate& standin() {
  static const RiggedTemplate rig = generate_standin_template();
  return rig;
}

RigidTransform random_similarity(std::mt19937_64& rng, bool with_scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RigidTransform m;
  m.rotation = rotation_from_axis_angle(Vec3(u(rng), u(rng), u(rng)) * 1.7);
  m.translation = Vec3(u(rng), u(rng), u(rng)) * 3.0;
  m.scale = with_scale ? std::exp(0.5 * u(rng)) : 1.0;
  return m;
}

/// Record whose joints and camera are the template's moved by motion.
AlignmentInput synthetic_record(const RigidTransform& motion, const BodyPose& pose, const CameraParams& truth) {
  AlignmentInput in;
  embed_neck_head_pose(in.body, pose);
  auto joints = alignment_joints(standin(), pose);
  for (auto& j : joints) j = motion.apply(j);
  in.joints = joints;
  in.fixed_camera = transform_camera(truth, motion);
  return in;
}

TEST(Similarity, RecoversKnownMotion) {
  std::mt19937_64 rng(5);
  std::vector<Vec3> src = {Vec3(0, 0, 0), Vec3(0, 0.12, 0), Vec3(0.17, -0.05, 0), Vec3(-0.17, -0.05, 0.02)};
  for (int trial = 0; trial < 20; ++trial) {
    const RigidTransform m = random_similarity(rng, true);
    std::vector<Vec3> dst;
    for (const auto& p : src) dst.push_back(m.apply(p));
    const RigidTransform fit = fit_similarity(src, dst);
    EXPECT_LT((fit.rotation - m.rotation).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(fit.scale, m.scale, 1e-9);
    EXPECT_LT((fit.translation - m.translation).norm(), 1e-9);
  }
}

TEST(Similarity, RigidModeKeepsUnitScale) {
  std::vector<Vec3> src = {Vec3(0, 0, 0), Vec3(0, 1, 0), Vec3(1, 0, 0)};
  std::vector<Vec3> dst;
  for (const auto& p : src) dst.push_back(2.0 * p);
  EXPECT_NEAR(fit_similarity(src, dst, true).scale, 2.0, 1e-12);
  EXPECT_EQ(fit_similarity(src, dst, false).scale, 1.0);
}

TEST(Similarity, InverseComposesToIdentity) {
  std::mt19937_64 rng(8);
  const RigidTransform m = random_similarity(rng, true);
  const Vec3 x(0.3, -0.2, 0.9);
  EXPECT_LT((m.inverse().apply(m.apply(x)) - x).norm(), 1e-12);
}

TEST(Similarity, CollinearJointsRejected) {
  std::vector<Vec3> src = {Vec3(0, 0, 0), Vec3(0, 1, 0), Vec3(0, 2, 0), Vec3(0, 3, 0)};
  EXPECT_THROW(fit_similarity(src, src), ValidationError);
  std::vector<Vec3> same(4, Vec3(1, 2, 3));
  EXPECT_THROW(fit_similarity(same, same), ValidationError);
}

TEST(Similarity, FitIsLeastSquaresOptimal) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto src_a = alignment_joints(standin(), BodyPose{});
  const std::vector<Vec3> src(src_a.begin(), src_a.end());
  const RigidTransform m = random_similarity(rng, true);
  std::vector<Vec3> dst;
  for (const auto& p : src) dst.push_back(m.apply(p) + Vec3(noise(rng), noise(rng), noise(rng)));
  const RigidTransform fit = fit_similarity(src, dst);
  auto cost = [&](const RigidTransform& t) {
    double c = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) c += (t.apply(src[i]) - dst[i]).squaredNorm();
    return c;
  };
  const double best = cost(fit);
  for (int k = 0; k < 2000; ++k) {
    const double step = k < 1000 ? 1e-2 : 1e-4;
    RigidTransform p = fit;
    p.rotation = rotation_from_axis_angle(Vec3(u(rng), u(rng), u(rng)) * step) * fit.rotation;
    p.translation += Vec3(u(rng), u(rng), u(rng)) * step;
    p.scale *= 1.0 + u(rng) * step;
    EXPECT_GE(cost(p), best - 1e-15);
  }
}

TEST(CameraTransform, PreservesProjections) {
  std::mt19937_64 rng(21);
  const CameraParams c = camera_from_spherical(1.1, 1.3);
  const RigidTransform m = random_similarity(rng, true);
  const CameraParams moved = transform_camera(c, m);
  const Vec3 x(0.05, 0.1, -0.04);
  const auto a = project(c, x, 256, 256);
  const auto b = project(moved, m.apply(x), 256, 256);
  ASSERT_TRUE(a && b);
  EXPECT_LT((*a - *b).norm(), 1e-9);
}

TEST(Alignment, IdentityInputGivesIdentityTransform) {
  AlignmentInput in;
  in.fixed_camera = camera_from_spherical(kPi / 2, kPi / 2);
  const AlignmentResult r = solve_alignment(in, standin());
  EXPECT_LT((r.transform.rotation - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(r.transform.translation.norm(), 1e-9);
  EXPECT_NEAR(r.transform.scale, 1.0, 1e-9);
  EXPECT_LT(r.residual, 1e-9);
  EXPECT_TRUE(r.pose.is_neutral());
}

TEST(Alignment, RecoversRandomSimilarityMotions) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CameraConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    const BodyPose pose{Vec3(u(rng), u(rng), u(rng)) * 0.4, Vec3(u(rng), u(rng), u(rng)) * 0.4};
    const CameraParams truth = camera_from_spherical(u(rng) * kPi, 1.57 + u(rng) * 0.6);
    const RigidTransform motion = random_similarity(rng, true);
    const AlignmentResult r = solve_alignment(synthetic_record(motion, pose, truth), standin());
    EXPECT_LT(r.residual, 1e-6);
    EXPECT_NEAR(r.transform.scale, 1.0 / motion.scale, 1e-6);
    EXPECT_LT((r.camera.extrinsic - truth.extrinsic).cwiseAbs().maxCoeff(), 1e-6) << trial;
    EXPECT_NEAR((r.camera.center() - cfg.lookat).norm(), 2.7, 1e-12);
    EXPECT_EQ(r.camera.intrinsic, cfg.intrinsic());
  }
}

TEST(Alignment, ScaledMotionRecoversInverseScale) {
  std::mt19937_64 rng(2);
  RigidTransform motion = random_similarity(rng, false);
  motion.scale = 1.2;
  const AlignmentResult r = solve_alignment(synthetic_record(motion, BodyPose{}, camera_from_spherical(1.4, 1.5)),
                                            standin());
  EXPECT_NEAR(r.transform.scale, 1.0 / 1.2, 1e-6);
}

TEST(Alignment, IsIdempotent) {
  std::mt19937_64 rng(3);
  const CameraParams truth = camera_from_spherical(2.0, 1.2);
  const AlignmentResult first = solve_alignment(synthetic_record(random_similarity(rng, true), BodyPose{}, truth),
                                                standin());
  AlignmentInput again;
  again.fixed_camera = first.camera;
  const AlignmentResult second = solve_alignment(again, standin());
  EXPECT_LT((second.transform.matrix() - Mat4::Identity()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((second.camera.extrinsic - first.camera.extrinsic).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Alignment, ComputedJointsFromGlobalMotion) {
  AlignmentInput in;
  in.body.rot = Vec3(0.2, -1.1, 0.4);
  in.body.trans = Vec3(0.5, -0.3, 4.0);
  const BodyPose pose{Vec3(0.0, 0.3, 0.0), Vec3(0.1, 0.0, 0.0)};
  embed_neck_head_pose(in.body, pose);
  const CameraParams truth = camera_from_spherical(1.0, 1.4);
  RigidTransform motion;
  motion.rotation = rotation_from_axis_angle(in.body.rot);
  motion.translation = in.body.trans;
  in.fixed_camera = transform_camera(truth, motion);
  const AlignmentResult r = solve_alignment(in, standin());
  EXPECT_EQ(r.pose, pose);
  EXPECT_LT(r.residual, 1e-9);
  EXPECT_LT((r.camera.extrinsic - truth.extrinsic).cwiseAbs().maxCoeff(), 1e-9);
  AlignmentOptions rigid;
  rigid.allow_scale = false;
  EXPECT_EQ(solve_alignment(in, standin(), rigid).transform.scale, 1.0);
}

TEST(Crop, FrontalCropIsCenteredSquare) {
  const CropRect c = compute_crop(camera_from_spherical(kPi / 2, kPi / 2), 512, 512);
  EXPECT_FALSE(c.clamped);
  EXPECT_EQ(c.width, c.height);
  EXPECT_NEAR(c.x + 0.5 * c.width, 256.0, 1.0);
  EXPECT_NEAR(c.y + 0.5 * c.height, 256.0, 1.0);
}

TEST(Crop, MirroredCameraMirrorsCrop) {
  for (double mu : {0.3, 1.0, 2.2, -2.0}) {
    const CameraParams cam = camera_from_spherical(mu, 1.3);
    const CropRect a = compute_crop(cam, 500, 400);
    const CropRect b = compute_crop(flip_camera(cam), 500, 400);
    EXPECT_EQ(a.width, b.width);
    EXPECT_EQ(a.y, b.y);
    EXPECT_NEAR(b.x, 500 - a.x - a.width, 1.0) << mu;
  }
}

TEST(Crop, OffFrameRegionIsClampedAndFlagged) {
  CameraConfig off;
  off.lookat = Vec3(0.5, 0.4, 0.0);
  const CropRect c = compute_crop(look_at_camera(Vec3(0.5, 0.4, 2.7), off), 256, 256);
  EXPECT_TRUE(c.clamped);
  EXPECT_GE(c.x, 0);
  EXPECT_LE(c.x + c.width, 256);
  EXPECT_LE(c.y + c.height, 256);
}

TEST(Overlay, DrawsTemplateVerticesAndIsDeterministic) {
  AlignmentInput in;
  in.fixed_camera = camera_from_spherical(1.2, 1.4);
  const AlignmentResult r = solve_alignment(in, standin());
  const Image a = render_overlay(r, standin(), Image(), 128, 128);
  const Image b = render_overlay(r, standin(), Image(), 128, 128);
  EXPECT_EQ(a, b);
  const Vec3 color(0.1, 1.0, 0.2);
  int drawn = 0;
  for (const auto& v : standin().mesh.vertices) {
    const auto p = project(r.camera, v, 128, 128);
    ASSERT_TRUE(p);
    const int x = static_cast<int>(std::floor(p->x()));
    const int y = static_cast<int>(std::floor(p->y()));
    if (x < 0 || y < 0 || x >= 128 || y >= 128) continue;
    ++drawn;
    EXPECT_EQ(a.at(x, y, 1), color.y());
  }
  EXPECT_GT(drawn, 100);
  EXPECT_EQ(a.at(0, 0, 0), 0.0);
  // Drawing the overlay again over itself changes nothing.
  EXPECT_EQ(render_overlay(r, standin(), a), a);
}

TEST(AlignmentJsonl, RoundTripAndPerRecordErrors) {
  std::mt19937_64 rng(4);
  const CameraParams truth = camera_from_spherical(1.3, 1.5);
  const AlignmentInput good = synthetic_record(random_similarity(rng, true), BodyPose{}, truth);
  std::stringstream in;
  in << alignment_input_to_json(good).dump() << "\n";
  in << "{not json\n\n";
  in << R"({"trans": [0, 0, 0], "rot": [0, 0, 0], "beta": [], "theta": [], "camera": {"extrinsic": []}})" << "\n";
  in << alignment_input_to_json(good).dump() << "\n";
  std::stringstream out;
  const auto stats = align_jsonl(in, out, standin());
  EXPECT_EQ(stats.ok, 2);
  EXPECT_EQ(stats.failed, 2);
  std::vector<nlohmann::json> lines;
  std::string line;
  while (std::getline(out, line)) lines.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0]["camera"].size(), 25u);
  EXPECT_EQ(lines[0]["pose"].size(), 6u);
  EXPECT_EQ(lines[1]["line"], 2);
  EXPECT_TRUE(lines[1].contains("error"));
  EXPECT_EQ(lines[2]["line"], 4);
  EXPECT_TRUE(lines[2].contains("error"));
  EXPECT_EQ(lines[3]["line"], 5);
  std::array<double, 25> c{};
  for (int i = 0; i < 25; ++i) c[i] = lines[0]["camera"][i].get<double>();
  EXPECT_LT((CameraParams::from_array(c).extrinsic - truth.extrinsic).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(AlignmentJsonl, EstimatorIntrinsicsAccepted) {
  nlohmann::json j = alignment_input_to_json(AlignmentInput{});
  j["camera"]["intrinsic"] = {1000.0, 0.0, 256.0, 0.0, 1000.0, 256.0, 0.0, 0.0, 1.0};
  EXPECT_NO_THROW(alignment_input_from_json(j));
  j["camera"]["extrinsic"][0] = 2.0;
  EXPECT_THROW(alignment_input_from_json(j), ValidationError);
}

}  // namespace
}  // namespace hsf

// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0

#include "hsf/schedules.hpp"

#include <gtest/gtest.h>

#include <random>

namespace hsf {
namespace {

TrainingClock m(double millions) { return TrainingClock::millions(millions); }

TEST(PoseLoss, ZeroUnitAndRandom) {
  const BodyPose a{Vec3(0.1, -0.2, 0.3), Vec3(0.4, 0.0, -0.1)};
  EXPECT_EQ(pose_loss(a, a), 0.0);
  BodyPose b = a;
  b.head.y() += 1.0;
  EXPECT_DOUBLE_EQ(pose_loss(a, b), 1.0);
  EXPECT_DOUBLE_EQ(pose_reg_loss(a, b), 1.0);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 50; ++k) {
    std::array<double, 6> x{}, y{};
    double expected = 0.0;
    for (int i = 0; i < 6; ++i) {
      x[i] = u(rng);
      y[i] = u(rng);
      expected += (x[i] - y[i]) * (x[i] - y[i]);
    }
    const BodyPose p = BodyPose::from_array(x), q = BodyPose::from_array(y);
    EXPECT_NEAR(pose_loss(p, q), expected, 1e-12);
    EXPECT_NEAR(pose_loss(q, p), expected, 1e-12);
    EXPECT_NEAR(pose_reg_loss(p, q), expected, 1e-12);
    EXPECT_NEAR(pose_loss(p, q, LossNorm::euclidean), std::sqrt(expected), 1e-12);
    EXPECT_GT(pose_loss(p, q), 0.0);
  }
}

TEST(Schedules, LambdaPreg) {
  EXPECT_EQ(lambda_preg(m(0)), 0.5);
  EXPECT_EQ(lambda_preg(m(0.2)), 0.5);
  EXPECT_DOUBLE_EQ(lambda_preg(m(0.3)), 0.25);
  EXPECT_EQ(lambda_preg(m(0.4)), 0.0);
  EXPECT_EQ(lambda_preg(m(7)), 0.0);
}

TEST(Schedules, SwapProbability) {
  EXPECT_EQ(swap_probability(m(0)), 1.0);
  EXPECT_DOUBLE_EQ(swap_probability(m(0.5)), 0.85);
  EXPECT_DOUBLE_EQ(swap_probability(m(1)), 0.7);
  EXPECT_DOUBLE_EQ(swap_probability(m(9)), 0.7);
  EXPECT_DOUBLE_EQ(swap_probability(m(13)), 0.7);
}

TEST(Schedules, NeuralResolution) {
  EXPECT_EQ(neural_resolution(m(0)), 64);
  EXPECT_EQ(neural_resolution(m(9)), 64);
  EXPECT_EQ(neural_resolution(m(10)), 64);
  EXPECT_EQ(neural_resolution(m(10.5)), 96);
  EXPECT_EQ(neural_resolution(m(11)), 128);
  EXPECT_EQ(neural_resolution(m(12)), 128);
  for (std::int64_t i = 10 * kMillion; i <= 11 * kMillion; i += 12345) {
    const int r = neural_resolution({i});
    EXPECT_EQ(r % 4, 0);
    EXPECT_GE(r, 64);
    EXPECT_LE(r, 128);
  }
}

TEST(Schedules, StageTable) {
  struct Row {
    double at;
    int stage;
    bool full_weight;
    int resolution;
    bool frozen;
  };
  // One probe inside every row of the stage table.
  for (const Row& r : {Row{0.1, 1, true, 64, false}, Row{3.0, 1, false, 64, false}, Row{8.0, 2, false, 64, true},
                       Row{10.5, 3, false, 96, true}, Row{12.0, 3, false, 128, true}}) {
    const StageInfo s = stage_of(m(r.at));
    EXPECT_EQ(s.stage, r.stage) << r.at;
    EXPECT_EQ(s.preg_full_weight, r.full_weight) << r.at;
    EXPECT_EQ(s.gamma_g_frozen, r.frozen) << r.at;
    EXPECT_EQ(neural_resolution(m(r.at)), r.resolution) << r.at;
    EXPECT_TRUE(s.warning.empty());
  }
  EXPECT_TRUE(stage_of(m(0.1)).preg_active);
  EXPECT_TRUE(stage_of(m(0.3)).preg_active);
  EXPECT_FALSE(stage_of(m(0.4)).preg_active);
  EXPECT_EQ(stage_of(m(5)).stage, 1);
  EXPECT_EQ(stage_of(m(6)).stage, 2);
  EXPECT_EQ(stage_of(m(10)).stage, 3);
  EXPECT_EQ(stage_of(m(13)).stage, 3);
}

TEST(Schedules, PastEndWarns) {
  const StageInfo s = stage_of(m(14));
  EXPECT_EQ(s.stage, 3);
  EXPECT_FALSE(s.warning.empty());
}

TEST(Schedules, NegativeClockRejected) {
  EXPECT_THROW(lambda_preg({-1}), ValidationError);
  EXPECT_THROW(stage_of({-1}), ValidationError);
}

TEST(Schedules, RegularizerVanishesAfterDecay) {
  const BodyPose a{Vec3(3, 3, 3), Vec3(-3, -3, -3)};
  for (double at : {0.4, 0.5, 2.0, 13.0}) EXPECT_EQ(lambda_preg(m(at)) * pose_reg_loss(a, BodyPose{}), 0.0);
}

TEST(Schedules, MonotoneOnEachPiece) {
  double prev_l = 1.0, prev_s = 2.0;
  int prev_r = 0;
  for (std::int64_t i = 0; i <= kTrainingLength; i += 7919) {
    const TrainingClock c{i};
    EXPECT_LE(lambda_preg(c), prev_l);
    EXPECT_LE(swap_probability(c), prev_s);
    EXPECT_GE(neural_resolution(c), prev_r);
    prev_l = lambda_preg(c);
    prev_s = swap_probability(c);
    prev_r = neural_resolution(c);
  }
}

}  // namespace
}  // namespace hsf

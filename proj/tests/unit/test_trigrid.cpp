// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0

#include "hsf/oracles.hpp"
#include "hsf/procedural_field.hpp"
#include "hsf/trigrid.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace hsf {
namespace {

TriGrid random_grid(std::uint64_t seed, int d, int r, int c) {
  TriGrid g(d, r, c);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (float& f : g.data()) f = u(rng);
  return g;
}

FieldDecoder random_decoder(std::uint64_t seed, int in, std::vector<int> hidden) {
  FieldDecoder dec = FieldDecoder::zeros(in, hidden);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 0.5f);
  for (auto& l : dec.mutable_layers()) {
    for (float& w : l.weights) w = n(rng);
    for (float& b : l.bias) b = n(rng);
  }
  return dec;
}

TEST(TriGrid, ConstantGridSamplesThreeTimesTheConstant) {
  TriGrid g(3, 5, 2);
  for (float& f : g.data()) f = 0.25f;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const auto f = g.sample(Vec3(u(rng), u(rng), u(rng)));
    EXPECT_NEAR(f[0], 0.75, 1e-12);
    EXPECT_NEAR(f[1], 0.75, 1e-12);
  }
}

TEST(TriGrid, NodeSampleIsSumOfStoredValues) {
  const TriGrid g = random_grid(2, 3, 5, 1);
  // Node (col 1, row 3) of XY, layer for z = 0 is 1 of 3.
  const Vec3 x(-0.5, 0.5, 0.0);
  const double xy = g.at(Plane::xy, 1, 3, 1, 0);
  const double yz = g.at(Plane::yz, g.layer_for(-0.5), 2, 3, 0);  // col = y, row = z
  const double xz = g.at(Plane::xz, g.layer_for(0.5), 2, 1, 0);   // col = x, row = z
  EXPECT_NEAR(g.sample(x)[0], xy + yz + xz, 1e-12);
}

TEST(TriGrid, MatchesTentSumOracle) {
  for (auto [d, r] : {std::pair{1, 2}, std::pair{4, 7}, std::pair{8, 16}}) {
    const TriGrid g = random_grid(3 + d, d, r, 3);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 500; ++i) {
      const Vec3 x(u(rng), u(rng), u(rng));
      const auto got = g.sample(x);
      const auto want = oracle::trigrid_by_tent_sum(g, x);
      for (int ch = 0; ch < 3; ++ch) ASSERT_NEAR(got[ch], want[ch], 1e-6) << "D=" << d << " R=" << r;
    }
    // Domain faces and corners.
    for (const Vec3& x : {Vec3(1, 1, 1), Vec3(-1, -1, -1), Vec3(1, -0.3, 0.2), Vec3(0.1, 1, -1)}) {
      const auto got = g.sample(x);
      const auto want = oracle::trigrid_by_tent_sum(g, x);
      for (int ch = 0; ch < 3; ++ch) ASSERT_NEAR(got[ch], want[ch], 1e-6);
    }
  }
}

TEST(TriGrid, OutsideCubeIsZero) {
  const TriGrid g = random_grid(5, 2, 4, 2);
  for (const Vec3& x : {Vec3(1.0001, 0, 0), Vec3(0, -1.5, 0), Vec3(0, 0, 3)}) {
    const auto f = g.sample(x);
    EXPECT_EQ(f[0], 0.0);
    EXPECT_EQ(f[1], 0.0);
  }
}

TEST(TriGrid, ChangingOneNodeIsLocal) {
  TriGrid g = random_grid(6, 2, 9, 1);
  const TriGrid before = g;
  g.at(Plane::xy, 1, 4, 4, 0) += 1.0f;  // node at x = y = 0, layer for z >= 0
  const double spacing = 2.0 / 8;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 x(u(rng), u(rng), u(rng));
    const bool in_support = std::abs(x.x()) < spacing && std::abs(x.y()) < spacing && g.layer_for(x.z()) == 1;
    if (!in_support) ASSERT_EQ(g.sample(x)[0], before.sample(x)[0]);
  }
}

TEST(TriGrid, SymmetrizedGridSamplesSymmetrically) {
  const TriGrid g = symmetrize_x(random_grid(8, 5, 11, 2));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 x(u(rng), u(rng), u(rng));
    const auto a = g.sample(x);
    const auto b = g.sample(Vec3(-x.x(), x.y(), x.z()));
    ASSERT_NEAR(a[0], b[0], 1e-6);
    ASSERT_NEAR(a[1], b[1], 1e-6);
  }
  EXPECT_EQ(mirror_x(mirror_x(g)), g);
}

TEST(TriGrid, MirrorMatchesReflectedSampling) {
  const TriGrid g = random_grid(10, 3, 6, 1);
  const TriGrid m = mirror_x(g);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 x(u(rng), u(rng), u(rng));
    ASSERT_NEAR(m.sample(x)[0], g.sample(Vec3(-x.x(), x.y(), x.z()))[0], 1e-6);
  }
}

TEST(TriGrid, InvalidShapeRejected) {
  EXPECT_THROW(TriGrid(0, 4, 1), ValidationError);
  EXPECT_THROW(TriGrid(1, 1, 1), ValidationError);
  EXPECT_THROW(TriGrid(1, 4, 0), ValidationError);
}

TEST(Decoder, ZeroWeightsGiveClosedForm) {
  const FieldDecoder dec = FieldDecoder::zeros(5);
  const std::vector<double> f = {0.3, -2.0, 7.0, 0.0, 1.0};
  const FieldSample s = decode(dec, f);
  EXPECT_DOUBLE_EQ(s.color.x(), 0.5);
  EXPECT_DOUBLE_EQ(s.color.y(), 0.5);
  EXPECT_DOUBLE_EQ(s.color.z(), 0.5);
  EXPECT_NEAR(s.density, std::log(2.0), 1e-15);
}

TEST(Decoder, MatchesDenseOracle) {
  const FieldDecoder dec = random_decoder(12, 6, {64, 32});
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> f(6);
    for (double& v : f) v = u(rng);
    const FieldSample got = decode(dec, f);
    const FieldSample want = oracle::decode_dense(dec, f);
    ASSERT_NEAR(got.density, want.density, 1e-9);
    ASSERT_LT((got.color - want.color).norm(), 1e-9);
    ASSERT_GE(got.density, 0.0);
    ASSERT_TRUE((got.color.array() >= 0.0).all() && (got.color.array() <= 1.0).all());
  }
}

TEST(Decoder, WrongFeatureLengthRejected) {
  const FieldDecoder dec = FieldDecoder::zeros(4);
  const std::vector<double> f(3, 0.0);
  EXPECT_THROW(decode(dec, f), ValidationError);
}

TEST(Decoder, BrokenChainRejected) {
  std::vector<DenseLayer> layers = {{4, 8, std::vector<float>(32), std::vector<float>(8)},
                                    {7, 4, std::vector<float>(28), std::vector<float>(4)}};
  EXPECT_THROW(FieldDecoder{layers}, ValidationError);
  std::vector<DenseLayer> wrong_out = {{4, 3, std::vector<float>(12), std::vector<float>(3)}};
  EXPECT_THROW(FieldDecoder{wrong_out}, ValidationError);
}

TEST(Decoder, PassThroughRecoversFeatures) {
  const FieldDecoder dec = make_passthrough_decoder(60.0);
  const std::vector<double> f = {2.6, 0.4, -1.2, 2.0};
  const FieldSample s = decode(dec, f);
  EXPECT_NEAR(s.density, softplus(60.0 * (2.6 - 2.5)), 1e-9);
  EXPECT_NEAR(s.color.x(), sigmoid(0.4), 1e-12);
  EXPECT_NEAR(s.color.y(), sigmoid(-1.2), 1e-12);
  EXPECT_NEAR(s.color.z(), sigmoid(2.0), 1e-12);
}

TEST(FieldIo, WeightsRoundTripBitExact) {
  const FieldDecoder dec = random_decoder(14, 4, {64});
  std::stringstream buf;
  write_weights(buf, dec);
  EXPECT_EQ(read_weights(buf), dec);
}

TEST(FieldIo, GridRoundTripBitExact) {
  const TriGrid g = random_grid(15, 3, 8, 4);
  std::stringstream buf;
  write_grid(buf, g);
  EXPECT_EQ(read_grid(buf), g);
}

TEST(FieldIo, CorruptHeaderRejected) {
  const FieldDecoder dec = FieldDecoder::zeros(4);
  std::stringstream buf;
  write_weights(buf, dec);
  std::string bytes = buf.str();
  bytes[0] = 'X';
  std::stringstream bad(bytes);
  EXPECT_THROW(read_weights(bad), ValidationError);

  std::string version = buf.str();
  version[4] = 9;
  std::stringstream bad_version(version);
  EXPECT_THROW(read_weights(bad_version), ValidationError);
}

TEST(FieldIo, TruncationRejected) {
  const TriGrid g = random_grid(16, 2, 4, 2);
  std::stringstream buf;
  write_grid(buf, g);
  const std::string bytes = buf.str();
  std::stringstream cut(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_grid(cut), ValidationError);
  std::stringstream extra(bytes + "x");
  EXPECT_THROW(read_grid(extra), ValidationError);
}

TEST(FieldIo, GridIsLittleEndian) {
  TriGrid g(1, 2, 1);
  g.data()[0] = 1.0f;  // 0x3f800000
  std::stringstream buf;
  write_grid(buf, g);
  const std::string bytes = buf.str();
  ASSERT_EQ(bytes.substr(0, 4), "HSFG");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);  // version
  EXPECT_EQ(static_cast<unsigned char>(bytes[20]), 0x00);
  EXPECT_EQ(static_cast<unsigned char>(bytes[23]), 0x3f);
  EXPECT_EQ(static_cast<unsigned char>(bytes[22]), 0x80);
}

TEST(FieldIo, ChannelMismatchRejectedAtAssembly) {
  EXPECT_THROW(NeuralField(TriGrid(1, 4, 3), FieldDecoder::zeros(4)), ValidationError);
  EXPECT_NO_THROW(NeuralField(TriGrid(1, 4, 4), FieldDecoder::zeros(4)));
}

TEST(FieldIo, MissingFileIsIoError) {
  EXPECT_THROW(load_weights("/nonexistent/weights.hsfw"), IoError);
  EXPECT_THROW(load_grid("/nonexistent/grid.hsfg"), IoError);
}

TEST(PortraitField, SymmetricAndOpaqueInside) {
  const NeuralField field = make_portrait_field();
  // Head centre, neck and chest are inside; corners of the cube are empty.
  EXPECT_GT(field.density(Vec3(0, 0.22, 0.02)), 20.0);
  EXPECT_GT(field.density(Vec3(0, 0.05, 0.0)), 20.0);
  EXPECT_GT(field.density(Vec3(0, -0.2, 0.0)), 20.0);
  EXPECT_LT(field.density(Vec3(0.5, 0.5, 0.5)), 1e-9);
  EXPECT_LT(field.density(Vec3(0.0, 0.6, 0.0)), 1e-9);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 x(u(rng), u(rng), u(rng));
    const FieldSample a = field.query(x);
    const FieldSample b = field.query(Vec3(-x.x(), x.y(), x.z()));
    ASSERT_NEAR(a.density, b.density, 1e-6 * std::max(1.0, a.density));
    ASSERT_LT((a.color - b.color).norm(), 1e-6);
  }
}

TEST(PortraitField, FaceAndHairDiffer) {
  const NeuralField field = make_portrait_field();
  const Vec3 face = field.query(Vec3(0.0, 0.2, 0.08)).color;
  const Vec3 back = field.query(Vec3(0.0, 0.2, -0.06)).color;
  EXPECT_GT((face - back).norm(), 0.3);
}

TEST(AnalyticSphere, RampCrossesLevelOnSphere) {
  AnalyticSphereField s;
  s.edge_width = 0.1;
  EXPECT_DOUBLE_EQ(s.density(Vec3(0.5, 0, 0)), s.surface_level());
  EXPECT_DOUBLE_EQ(s.density(Vec3::Zero()), s.inside_density);
  EXPECT_DOUBLE_EQ(s.density(Vec3(0.9, 0, 0)), 0.0);
}

}  // namespace
}  // namespace hsf

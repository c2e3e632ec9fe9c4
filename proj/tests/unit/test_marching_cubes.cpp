// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0

#include "hsf/marching_cubes.hpp"
#include "hsf/procedural_field.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>

namespace hsf {
namespace {

double signed_volume(const TriangleMesh& m) {
  double v = 0.0;
  for (const auto& f : m.faces) v += m.vertices[f[0]].dot(m.vertices[f[1]].cross(m.vertices[f[2]])) / 6.0;
  return v;
}

/// Every directed edge must be matched by exactly one opposite directed edge.
bool closed_and_consistent(const TriangleMesh& m) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
  for (const auto& f : m.faces) {
    for (int k = 0; k < 3; ++k) ++directed[{f[k], f[(k + 1) % 3]}];
  }
  for (const auto& [e, count] : directed) {
    if (count != 1) return false;
    const auto it = directed.find({e.second, e.first});
    if (it == directed.end() || it->second != 1) return false;
  }
  return true;
}

double max_radial_error(const TriangleMesh& m, double radius) {
  double worst = 0.0;
  for (const Vec3& v : m.vertices) worst = std::max(worst, std::abs(v.norm() - radius));
  return worst;
}

AnalyticSphereField ramp_sphere() {
  AnalyticSphereField s;
  s.radius = 0.5;
  s.edge_width = 0.2;
  return s;
}

TEST(MarchingCubes, CaseTableIsComplete) {
  const auto& t = detail::cube_tables();
  EXPECT_TRUE(t.polygons[0].empty());
  EXPECT_TRUE(t.polygons[255].empty());
  for (int cs = 1; cs < 255; ++cs) {
    // Each edge with a sign change appears in exactly one loop.
    std::array<int, 12> seen{};
    for (const auto& loop : t.polygons[cs]) {
      EXPECT_GE(loop.size(), 3u);
      for (int e : loop) ++seen[e];
    }
    for (int e = 0; e < 12; ++e) {
      const auto& ec = t.edge_corners[e];
      const bool crossing = ((cs >> ec[0]) & 1) != ((cs >> ec[1]) & 1);
      EXPECT_EQ(seen[e], crossing ? 1 : 0) << "case " << cs << " edge " << e;
    }
  }
  // Single corner gives one triangle, opposite corners on a face give two.
  EXPECT_EQ(t.polygons[0b00000001].size(), 1u);
  EXPECT_EQ(t.polygons[0b00001001].size(), 2u);
}

TEST(MarchingCubes, SphereIsClosedOutwardAndAccurate) {
  const auto sphere = ramp_sphere();
  const TriangleMesh m = extract_isosurface([&](const Vec3& x) { return sphere.density(x); }, sphere.surface_level(), 32);
  ASSERT_GT(m.num_faces(), 100u);
  EXPECT_TRUE(closed_and_consistent(m));
  const double volume = signed_volume(m);
  EXPECT_NEAR(volume, 4.0 / 3.0 * kPi * 0.125, 0.02);
  EXPECT_GT(volume, 0.0);
  EXPECT_LT(max_radial_error(m, 0.5), 2.0 * (2.0 / 32));
  EXPECT_NO_THROW(m.validate());
}

TEST(MarchingCubes, ErrorShrinksWithResolution) {
  const auto sphere = ramp_sphere();
  auto density = [&](const Vec3& x) { return sphere.density(x); };
  double previous = 1.0;
  for (int res : {16, 32, 64}) {
    const double err = max_radial_error(extract_isosurface(density, sphere.surface_level(), res), 0.5);
    EXPECT_LT(err, 2.0 * (2.0 / res)) << res;
    EXPECT_LT(err, 0.5 * previous) << res;
    previous = err;
  }
}

TEST(MarchingCubes, LevelAboveMaxGivesEmptyMesh) {
  const auto sphere = ramp_sphere();
  const TriangleMesh m = extract_isosurface([&](const Vec3& x) { return sphere.density(x); }, 1e6, 16);
  EXPECT_EQ(m.num_faces(), 0u);
  EXPECT_EQ(m.num_vertices(), 0u);
}

TEST(MarchingCubes, RandomFieldsStayWatertight) {
  // Random values inside a padded box exercise every ambiguous face configuration.
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 9;
    std::vector<double> v(n * n * n);
    for (double& x : v) x = u(rng);
    auto density = [&](const Vec3& p) {
      const Vec3 q = (p.array() + 1.0) * 0.5 * (n + 1) - 1.0;
      const int i = static_cast<int>(std::lround(q.x()));
      const int j = static_cast<int>(std::lround(q.y()));
      const int k = static_cast<int>(std::lround(q.z()));
      if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n) return -1.0;
      return v[(k * n + j) * n + i];
    };
    // grid_res n + 1 puts lattice nodes exactly on the table entries plus an outside border.
    IsosurfaceOptions opt;
    const double pad = 2.0 / (n + 1);
    opt.bounds = Eigen::AlignedBox3d(Vec3::Constant(-1.0 - pad), Vec3::Constant(1.0 + pad));
    const TriangleMesh m = extract_isosurface(density, 0.1, n + 2, opt);
    EXPECT_TRUE(closed_and_consistent(m)) << "trial " << trial;
    EXPECT_GT(signed_volume(m), 0.0);
  }
}

TEST(MarchingCubes, DeterministicAcrossThreads) {
  const auto sphere = ramp_sphere();
  auto density = [&](const Vec3& x) { return sphere.density(x); };
  IsosurfaceOptions one, many;
  one.threads = 1;
  many.threads = 5;
  const TriangleMesh a = extract_isosurface(density, sphere.surface_level(), 24, one);
  const TriangleMesh b = extract_isosurface(density, sphere.surface_level(), 24, many);
  EXPECT_EQ(a.vertices, b.vertices);
  EXPECT_EQ(a.faces, b.faces);
}

TEST(MarchingCubes, SmallResolutionRejected) {
  EXPECT_THROW(extract_isosurface([](const Vec3&) { return 0.0; }, 0.0, 7), ValidationError);
}

TEST(MarchingCubes, PortraitFieldSurfaceIsClosed) {
  const NeuralField field = make_portrait_field();
  const TriangleMesh m = extract_isosurface(field.grid, field.decoder, 10.0, 48);
  ASSERT_GT(m.num_faces(), 500u);
  EXPECT_TRUE(closed_and_consistent(m));
  EXPECT_GT(signed_volume(m), 0.0);
}

}  // namespace
}  // namespace hsf

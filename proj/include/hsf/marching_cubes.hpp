// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Marching-cubes iso-surface extraction of {x : density(x) = level}.
//
// The per-case polygon table is derived at first use instead of being typed in: on every cube
// face, each crossing entered from an outside corner is joined to the next crossing that leaves
// toward an outside corner (counter-clockwise as seen from outside the cube). This keeps inside
// corners on an ambiguous face separated, and two cubes sharing a face make the same choice, so
// the output is watertight. Face segments are chained into loops and fan-triangulated with the
// normal pointing from high to low density.
#pragma once

#include "hsf/mesh.hpp"
#include "hsf/parallel.hpp"
#include "hsf/trigrid.hpp"

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace hsf {

namespace detail {

struct CubeTables {
  /// Corner index bits: x = bit 0, y = bit 1, z = bit 2.
  std::array<std::array<int, 2>, 12> edge_corners{};
  /// polygons[case] = loops of edge ids, each wound outward (toward low density).
  std::array<std::vector<std::vector<int>>, 256> polygons;
  /// Fan apex per loop (position in the loop), or -1 to fan around the loop centroid.
  std::array<std::vector<int>, 256> apex;
};

/// A fan diagonal lying in a cube face would be shared with the neighbouring cube and make
/// the surface non-manifold; the apex is chosen so every diagonal crosses the cube interior.
inline int choose_fan_apex(const std::vector<int>& loop, const std::array<unsigned, 12>& edge_faces) {
  const int n = static_cast<int>(loop.size());
  for (int a = 0; a < n; ++a) {
    bool ok = true;
    for (int k = 2; k + 1 < n && ok; ++k) {
      ok = (edge_faces[loop[a]] & edge_faces[loop[(a + k) % n]]) == 0;
    }
    if (ok) return a;
  }
  return -1;
}

inline const CubeTables& cube_tables() {
  static const CubeTables tables = [] {
    CubeTables t;
    int e = 0;
    std::array<std::array<int, 8>, 8> edge_of{};
    for (auto& row : edge_of) row.fill(-1);
    std::array<unsigned, 12> edge_faces{};  // bit 2 * axis + side for each cube face holding the edge
    for (int axis = 0; axis < 3; ++axis) {
      for (int c = 0; c < 8; ++c) {
        if (c & (1 << axis)) continue;
        const int d = c | (1 << axis);
        t.edge_corners[e] = {c, d};
        edge_of[c][d] = edge_of[d][c] = e;
        for (int b = 0; b < 3; ++b) {
          if (b != axis) edge_faces[e] |= 1u << (2 * b + ((c >> b) & 1));
        }
        ++e;
      }
    }
    // Counter-clockwise corner order seen from outside.
    constexpr std::array<std::array<int, 4>, 6> faces = {
        {{0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}}};

    for (int cs = 0; cs < 256; ++cs) {
      auto inside = [cs](int c) { return ((cs >> c) & 1) != 0; };
      // next_edge[entry edge] = exit edge on the face where that crossing is an entry.
      std::array<int, 12> next_edge;
      next_edge.fill(-1);
      for (const auto& f : faces) {
        std::array<int, 4> kind{};  // +1 entry (out -> in), -1 exit, 0 none
        for (int k = 0; k < 4; ++k) {
          const bool a = inside(f[k]);
          const bool b = inside(f[(k + 1) % 4]);
          kind[k] = a == b ? 0 : (b ? 1 : -1);
        }
        for (int k = 0; k < 4; ++k) {
          if (kind[k] != 1) continue;
          for (int s = 1; s < 4; ++s) {
            const int j = (k + s) % 4;
            if (kind[j] == -1) {
              next_edge[edge_of[f[k]][f[(k + 1) % 4]]] = edge_of[f[j]][f[(j + 1) % 4]];
              break;
            }
          }
        }
      }
      // Each crossing is the exit of one face and the entry of the other face on its edge,
      // so following next_edge from any crossing closes a loop.
      std::array<bool, 12> used{};
      for (int start = 0; start < 12; ++start) {
        if (next_edge[start] < 0 || used[start]) continue;
        std::vector<int> loop;
        for (int cur = start; !used[cur]; cur = next_edge[cur]) {
          used[cur] = true;
          loop.push_back(cur);
        }
        // Seen from outside the cube the walk keeps inside corners on its right, so the loop's
        // normal points away from them.
        t.apex[cs].push_back(choose_fan_apex(loop, edge_faces));
        t.polygons[cs].push_back(std::move(loop));
      }
    }
    return t;
  }();
  return tables;
}

}  // namespace detail

struct IsosurfaceOptions {
  Eigen::AlignedBox3d bounds{Vec3::Constant(-1.0), Vec3::Constant(1.0)};
  int threads = 0;
};

/// Marching cubes over a grid_res^3 cell lattice spanning options.bounds. density is any
/// callable Vec3 -> double. Inside means density > level. No surface yields an empty mesh.
template <typename DensityFn>
TriangleMesh extract_isosurface(DensityFn&& density, double level, int grid_res, const IsosurfaceOptions& options = {}) {
  if (grid_res < 8) throw ValidationError("iso-surface grid_res must be >= 8");
  if (!std::isfinite(level)) throw ValidationError("iso-surface level must be finite");
  const int n = grid_res + 1;
  const Vec3 lo = options.bounds.min();
  const Vec3 step = (options.bounds.max() - lo) / grid_res;
  auto node_pos = [&](int i, int j, int k) { return Vec3(lo.x() + i * step.x(), lo.y() + j * step.y(), lo.z() + k * step.z()); };
  auto node_id = [n](int i, int j, int k) { return (static_cast<std::size_t>(k) * n + j) * n + i; };

  std::vector<double> values(static_cast<std::size_t>(n) * n * n);
  parallel_for(
      static_cast<std::size_t>(n) * n,
      [&](std::size_t row) {
        const int k = static_cast<int>(row / n);
        const int j = static_cast<int>(row % n);
        for (int i = 0; i < n; ++i) values[node_id(i, j, k)] = density(node_pos(i, j, k));
      },
      options.threads);

  const auto& tables = detail::cube_tables();
  TriangleMesh mesh;
  std::unordered_map<std::size_t, std::uint32_t> vertex_of_edge;
  auto edge_vertex = [&](int i, int j, int k, int edge) {
    const auto& ec = tables.edge_corners[edge];
    const int a = ec[0];
    const int axis = (ec[1] ^ ec[0]) == 1 ? 0 : ((ec[1] ^ ec[0]) == 2 ? 1 : 2);
    const int ai = i + (a & 1), aj = j + ((a >> 1) & 1), ak = k + ((a >> 2) & 1);
    const std::size_t key = node_id(ai, aj, ak) * 3 + axis;
    const auto it = vertex_of_edge.find(key);
    if (it != vertex_of_edge.end()) return it->second;
    const int bi = ai + (axis == 0), bj = aj + (axis == 1), bk = ak + (axis == 2);
    const double va = values[node_id(ai, aj, ak)];
    const double vb = values[node_id(bi, bj, bk)];
    const double t = (level - va) / (vb - va);
    const Vec3 pa = node_pos(ai, aj, ak);
    const Vec3 pb = node_pos(bi, bj, bk);
    const auto id = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.push_back(pa + t * (pb - pa));
    vertex_of_edge.emplace(key, id);
    return id;
  };

  auto add_triangle = [&mesh](const Face& f) {
    const Vec3& p0 = mesh.vertices[f[0]];
    const double area = 0.5 * (mesh.vertices[f[1]] - p0).cross(mesh.vertices[f[2]] - p0).norm();
    if (area > kMinFaceArea) mesh.faces.push_back(f);
  };

  std::vector<std::uint32_t> loop;
  for (int k = 0; k < grid_res; ++k) {
    for (int j = 0; j < grid_res; ++j) {
      for (int i = 0; i < grid_res; ++i) {
        int cs = 0;
        for (int c = 0; c < 8; ++c) {
          if (values[node_id(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))] > level) cs |= 1 << c;
        }
        const auto& polys = tables.polygons[cs];
        for (std::size_t pi = 0; pi < polys.size(); ++pi) {
          loop.clear();
          for (int edge : polys[pi]) loop.push_back(edge_vertex(i, j, k, edge));
          const int n_loop = static_cast<int>(loop.size());
          const int apex = tables.apex[cs][pi];
          if (apex >= 0) {
            for (int t = 1; t + 1 < n_loop; ++t) {
              add_triangle({loop[apex], loop[(apex + t) % n_loop], loop[(apex + t + 1) % n_loop]});
            }
          } else {
            Vec3 centroid = Vec3::Zero();
            for (auto v : loop) centroid += mesh.vertices[v];
            const auto c = static_cast<std::uint32_t>(mesh.vertices.size());
            mesh.vertices.push_back(centroid / n_loop);
            for (int t = 0; t < n_loop; ++t) add_triangle({c, loop[t], loop[(t + 1) % n_loop]});
          }
        }
      }
    }
  }
  return mesh;
}

/// Iso-surface of the decoded density of a tri-grid field.
inline TriangleMesh extract_isosurface(const TriGrid& grid, const FieldDecoder& decoder, double level, int grid_res,
                                       const IsosurfaceOptions& options = {}) {
  const NeuralField field(grid, decoder);
  return extract_isosurface([&field](const Vec3& x) { return field.density(x); }, level, grid_res, options);
}

}  // namespace hsf

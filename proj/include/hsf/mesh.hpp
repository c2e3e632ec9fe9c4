// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Indexed triangle mesh plus the ASCII OBJ subset (v / f records) used for ingest and export.
#pragma once

#include "hsf/types.hpp"

#include <array>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace hsf {

using Face = std::array<std::uint32_t, 3>;

/// Faces below this area are treated as degenerate.
inline constexpr double kMinFaceArea = 1e-12;

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_faces() const { return faces.size(); }

  std::array<Vec3, 3> triangle(std::size_t f) const {
    const Face& idx = faces[f];
    return {vertices[idx[0]], vertices[idx[1]], vertices[idx[2]]};
  }

  double face_area(std::size_t f) const {
    const auto t = triangle(f);
    return 0.5 * (t[1] - t[0]).cross(t[2] - t[0]).norm();
  }

  /// Throws ValidationError on out-of-range indices, repeated indices, degenerate or non-finite faces.
  void validate() const {
    for (std::size_t v = 0; v < vertices.size(); ++v) {
      if (!vertices[v].allFinite()) throw ValidationError("mesh vertex " + std::to_string(v) + " is not finite");
    }
    for (std::size_t f = 0; f < faces.size(); ++f) {
      const Face& idx = faces[f];
      for (auto i : idx) {
        if (i >= vertices.size()) {
          throw ValidationError("face " + std::to_string(f) + " references vertex " + std::to_string(i) +
                                " out of range");
        }
      }
      if (idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2]) {
        throw ValidationError("face " + std::to_string(f) + " has repeated vertex indices");
      }
      if (!(face_area(f) > kMinFaceArea)) {
        throw ValidationError("face " + std::to_string(f) + " is degenerate");
      }
    }
  }

  Eigen::AlignedBox3d bounds() const {
    Eigen::AlignedBox3d box;
    for (const auto& v : vertices) box.extend(v);
    return box;
  }
};

/// Reads `v x y z` and `f a b c` records (1-based, `a/b/c` forms accepted; polygons fan-triangulated).
inline TriangleMesh read_obj(std::istream& in, const std::string& name = "<stream>") {
  TriangleMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ss >> p.x() >> p.y() >> p.z())) {
        throw ValidationError(name + ":" + std::to_string(line_no) + ": malformed vertex record");
      }
      mesh.vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<std::uint32_t> poly;
      std::string tok;
      while (ss >> tok) {
        const auto slash = tok.find('/');
        long idx = 0;
        try {
          idx = std::stol(tok.substr(0, slash));
        } catch (const std::exception&) {
          throw ValidationError(name + ":" + std::to_string(line_no) + ": malformed face index '" + tok + "'");
        }
        if (idx < 0) idx = static_cast<long>(mesh.vertices.size()) + idx + 1;
        if (idx < 1) throw ValidationError(name + ":" + std::to_string(line_no) + ": face index out of range");
        poly.push_back(static_cast<std::uint32_t>(idx - 1));
      }
      if (poly.size() < 3) throw ValidationError(name + ":" + std::to_string(line_no) + ": face needs 3 indices");
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
    }
  }
  return mesh;
}

inline TriangleMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh '" + path + "'");
  return read_obj(in, path);
}

inline void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

inline void save_obj(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write mesh '" + path + "'");
  write_obj(out, mesh);
  if (!out) throw IoError("failed writing mesh '" + path + "'");
}

}  // namespace hsf

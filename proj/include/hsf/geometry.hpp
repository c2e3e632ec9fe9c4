// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Point-triangle queries and per-face orthonormal frames.
#pragma once

#include "hsf/mesh.hpp"

#include <cmath>

namespace hsf {

struct ClosestHit {
  std::uint32_t face_id = 0;
  Vec3 point = Vec3::Zero();
  double distance = 0.0;
  Vec3 barycentric = Vec3(1.0, 0.0, 0.0);
};

/// Closest point on triangle (a, b, c) to q, by Voronoi-region classification.
/// The returned barycentrics are nonnegative and sum to one.
inline ClosestHit closest_point_on_triangle(const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  if (!(0.5 * ab.cross(ac).norm() > kMinFaceArea)) throw ValidationError("closest_point_on_triangle: degenerate triangle");

  auto finish = [&](double u, double v, double w) {
    ClosestHit hit;
    hit.barycentric = Vec3(u, v, w);
    hit.point = u * a + v * b + w * c;
    hit.distance = (q - hit.point).norm();
    return hit;
  };

  const Vec3 ap = q - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return finish(1, 0, 0);

  const Vec3 bp = q - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return finish(0, 1, 0);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return finish(1 - v, v, 0);
  }

  const Vec3 cp = q - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return finish(0, 0, 1);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return finish(1 - w, 0, w);
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return finish(0, 1 - w, w);
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return finish(1.0 - v - w, v, w);
}

inline ClosestHit closest_point_on_triangle(const Vec3& q, const std::array<Vec3, 3>& tri) {
  return closest_point_on_triangle(q, tri[0], tri[1], tri[2]);
}

/// Orthonormal frame attached to a face. Columns of `axes` are the u, v and h (normal) directions.
struct LocalFrame {
  Vec3 origin = Vec3::Zero();
  Mat3 axes = Mat3::Identity();

  Vec3 to_local(const Vec3& p) const { return axes.transpose() * (p - origin); }
  Vec3 from_local(const Vec3& uvh) const { return origin + axes * uvh; }
};

inline LocalFrame local_frame(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 n = e1.cross(c - a);
  if (!(0.5 * n.norm() > kMinFaceArea)) throw ValidationError("local_frame: degenerate face");
  LocalFrame frame;
  frame.origin = a;
  const Vec3 u = e1.normalized();
  const Vec3 h = n.normalized();
  frame.axes.col(0) = u;
  frame.axes.col(1) = h.cross(u);
  frame.axes.col(2) = h;
  return frame;
}

inline LocalFrame local_frame(const TriangleMesh& mesh, std::size_t face_id) {
  if (face_id >= mesh.num_faces()) throw ValidationError("local_frame: face id out of range");
  const auto t = mesh.triangle(face_id);
  return local_frame(t[0], t[1], t[2]);
}

}  // namespace hsf

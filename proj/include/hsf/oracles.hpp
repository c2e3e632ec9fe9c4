// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Slow, independent reference computations. Used by the test suites and by `hsf verify`;
// nothing on the production path calls into this header.
#pragma once

#include "hsf/body_model.hpp"
#include "hsf/geometry.hpp"
#include "hsf/trigrid.hpp"

#include <limits>
#include <vector>

namespace hsf::oracle {

/// Minimum distance from q to the triangle, by dense sampling of the barycentric simplex.
/// Accuracy is bounded by the sample spacing (edge length / n).
inline ClosestHit triangle_by_sampling(const Vec3& q, const std::array<Vec3, 3>& tri, int n) {
  ClosestHit best;
  best.distance = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; i + j <= n; ++j) {
      const double b1 = static_cast<double>(i) / n;
      const double b2 = static_cast<double>(j) / n;
      const double b0 = 1.0 - b1 - b2;
      const Vec3 p = b0 * tri[0] + b1 * tri[1] + b2 * tri[2];
      const double d = (q - p).norm();
      if (d < best.distance) {
        best.distance = d;
        best.point = p;
        best.barycentric = Vec3(b0, b1, b2);
      }
    }
  }
  return best;
}

/// Linear blend skinning through explicit homogeneous 4x4 joint matrices, blended as
/// v' = sum_j w_j G_j v. Walks the kinematic chain from scratch for every joint.
inline std::vector<Vec3> lbs_homogeneous(const RiggedTemplate& rig, const BodyPose& pose) {
  const int neck = rig.find_joint(joint_names::kNeck);
  const int head = rig.find_joint(joint_names::kHead);
  auto local = [&](int j) {
    Vec3 aa = Vec3::Zero();
    if (j == neck) aa = pose.neck;
    if (j == head) aa = pose.head;
    Mat4 to_pivot = Mat4::Identity();
    to_pivot.block<3, 1>(0, 3) = -rig.joints[j].position;
    Mat4 from_pivot = Mat4::Identity();
    from_pivot.block<3, 1>(0, 3) = rig.joints[j].position;
    Mat4 rot = Mat4::Identity();
    if (aa.norm() > 0.0) rot.block<3, 3>(0, 0) = Eigen::AngleAxisd(aa.norm(), aa.normalized()).toRotationMatrix();
    return Mat4(from_pivot * rot * to_pivot);
  };
  std::vector<Mat4> world(rig.joints.size());
  for (std::size_t j = 0; j < rig.joints.size(); ++j) {
    std::vector<int> chain;
    for (int k = static_cast<int>(j); k >= 0; k = rig.joints[k].parent) chain.push_back(k);
    Mat4 g = Mat4::Identity();
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) g = g * local(*it);
    world[j] = g;
  }
  std::vector<Vec3> out(rig.mesh.num_vertices());
  for (std::size_t v = 0; v < out.size(); ++v) {
    Eigen::Vector4d acc = Eigen::Vector4d::Zero();
    const Eigen::Vector4d rest = rig.mesh.vertices[v].homogeneous();
    for (const auto& sw : rig.weights[v]) acc += sw.weight * (world[sw.joint] * rest);
    out[v] = acc.head<3>();
  }
  return out;
}

/// Tri-grid sample computed by visiting every node of every plane layer and weighting it by
/// the separable tent kernel max(0, 1 - |node - coord|).
inline std::vector<double> trigrid_by_tent_sum(const TriGrid& g, const Vec3& x) {
  std::vector<double> out(g.channels(), 0.0);
  for (int k = 0; k < 3; ++k) {
    if (std::abs(x[k]) > 1.0) return out;
  }
  const int n = g.resolution();
  const double scale = 0.5 * (n - 1);
  for (int p = 0; p < 3; ++p) {
    const auto& ax = TriGrid::kAxes[p];
    const double fc = (x[ax[0]] + 1.0) * scale;
    const double fr = (x[ax[1]] + 1.0) * scale;
    // Nearest layer by brute force over layer centres.
    int layer = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int l = 0; l < g.layers(); ++l) {
      const double centre = g.layers() == 1 ? 0.0 : -1.0 + 2.0 * l / (g.layers() - 1);
      const double d = std::abs(x[ax[2]] - centre);
      if (d < best - 1e-12) {
        best = d;
        layer = l;
      }
    }
    for (int r = 0; r < n; ++r) {
      const double wr = std::max(0.0, 1.0 - std::abs(fr - r));
      for (int c = 0; c < n; ++c) {
        const double w = wr * std::max(0.0, 1.0 - std::abs(fc - c));
        if (w == 0.0) continue;
        for (int ch = 0; ch < g.channels(); ++ch) out[ch] += w * g.at(static_cast<Plane>(p), layer, r, c, ch);
      }
    }
  }
  return out;
}

/// Decoder forward pass with Eigen matrices and the activations written out longhand.
inline FieldSample decode_dense(const FieldDecoder& dec, const std::vector<double>& feature) {
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(feature.data(), static_cast<Eigen::Index>(feature.size()));
  const auto& layers = dec.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    Eigen::MatrixXd w(l.out, l.in);
    for (int o = 0; o < l.out; ++o) {
      for (int k = 0; k < l.in; ++k) w(o, k) = l.weights[static_cast<std::size_t>(o) * l.in + k];
    }
    Eigen::VectorXd b(l.out);
    for (int o = 0; o < l.out; ++o) b[o] = l.bias[o];
    a = w * a + b;
    if (i + 1 < layers.size()) a = a.unaryExpr([](double z) { return std::log(1.0 + std::exp(z)); });
  }
  FieldSample s;
  for (int c = 0; c < 3; ++c) s.color[c] = std::exp(a[c]) / (1.0 + std::exp(a[c]));
  s.density = std::log(1.0 + std::exp(a[3]));
  return s;
}

}  // namespace hsf::oracle

// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Shared scalar/vector aliases and the error hierarchy used across the library.
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>

namespace hsf {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Failure classes. The CLI maps them onto process exit codes.
enum class ErrorKind { io, validation, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

inline constexpr double kPi = 3.14159265358979323846;

/// Similarity transform x -> scale * rotation * x + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;

  Vec3 apply(const Vec3& x) const { return scale * (rotation * x) + translation; }

  RigidTransform inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.scale = 1.0 / scale;
    inv.translation = -inv.scale * (inv.rotation * translation);
    return inv;
  }

  RigidTransform compose(const RigidTransform& inner) const {
    RigidTransform out;
    out.rotation = rotation * inner.rotation;
    out.scale = scale * inner.scale;
    out.translation = scale * (rotation * inner.translation) + translation;
    return out;
  }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.block<3, 3>(0, 0) = scale * rotation;
    m.block<3, 1>(0, 3) = translation;
    return m;
  }

  bool is_valid(double tol = 1e-6) const {
    return scale > 0.0 && (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < tol &&
           rotation.determinant() > 0.0;
  }
};

/// Rotation matrix for an axis-angle vector (Rodrigues). Zero vector gives the identity exactly.
inline Mat3 rotation_from_axis_angle(const Vec3& aa) {
  const double angle = aa.norm();
  if (angle == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, aa / angle).toRotationMatrix();
}

}  // namespace hsf

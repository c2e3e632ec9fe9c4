// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Cameras on a sphere around a fixed look-at point, with fixed normalized intrinsics.
//
// Conventions:
//  * extrinsic is world-to-camera with OpenCV axes (x right, y down, z forward).
//  * spherical (mu, nu): center = lookat + r * (-sin nu cos mu, cos nu, sin nu sin mu).
//    mu = nu = pi/2 is the frontal camera on +z; mu grows counter-clockwise seen from +y;
//    mu in (0, pi) is in front of the subject and negative mu behind it.
//  * intrinsics are normalized by image size: focal f, principal point (cx, cy).
#pragma once

#include "hsf/types.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace hsf {

struct CameraConfig {
  double radius = 2.7;
  Vec3 lookat = Vec3(0.0, 0.06, 0.0);
  double focal = 4.26;
  double cx = 0.5;
  double cy = 0.5;
  Vec3 up = Vec3(0.0, 1.0, 0.0);

  Mat3 intrinsic() const {
    Mat3 k;
    k << focal, 0.0, cx, 0.0, focal, cy, 0.0, 0.0, 1.0;
    return k;
  }
};

struct SphericalPose {
  double mu = kPi / 2;
  double nu = kPi / 2;
  double radius = 2.7;
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();

  Vec3 at(double t) const { return origin + t * direction; }
};

struct CameraParams {
  Mat4 extrinsic = Mat4::Identity();  // world -> camera
  Mat3 intrinsic = CameraConfig{}.intrinsic();

  Mat3 rotation() const { return extrinsic.block<3, 3>(0, 0); }
  Vec3 translation() const { return extrinsic.block<3, 1>(0, 3); }
  Vec3 center() const { return -(rotation().transpose() * translation()); }

  /// c = [e (16, row-major), k (9, row-major)].
  std::array<double, 25> to_array() const {
    std::array<double, 25> c{};
    for (int r = 0; r < 4; ++r) {
      for (int k = 0; k < 4; ++k) c[r * 4 + k] = extrinsic(r, k);
    }
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) c[16 + r * 3 + k] = intrinsic(r, k);
    }
    return c;
  }

  static CameraParams from_array(const std::array<double, 25>& c) {
    CameraParams p;
    for (int r = 0; r < 4; ++r) {
      for (int k = 0; k < 4; ++k) p.extrinsic(r, k) = c[r * 4 + k];
    }
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) p.intrinsic(r, k) = c[16 + r * 3 + k];
    }
    return p;
  }

  /// Orthonormal right-handed rotation, affine bottom row, finite values, fixed intrinsics.
  void validate(const CameraConfig& cfg = {}) const {
    if (!extrinsic.allFinite() || !intrinsic.allFinite()) throw ValidationError("camera has non-finite entries");
    const Mat3 r = rotation();
    if ((r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 || r.determinant() < 0.0) {
      throw ValidationError("camera rotation is not orthonormal");
    }
    if ((extrinsic.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12) {
      throw ValidationError("camera extrinsic bottom row must be [0 0 0 1]");
    }
    if ((intrinsic - cfg.intrinsic()).cwiseAbs().maxCoeff() > 1e-9) {
      throw ValidationError("camera intrinsics differ from the fixed intrinsics");
    }
  }
};

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

inline Vec3 sphere_direction(double mu, double nu) {
  return Vec3(-std::sin(nu) * std::cos(mu), std::cos(nu), std::sin(nu) * std::sin(mu));
}

/// Camera at center looking at cfg.lookat with cfg.up as the approximate image up.
inline CameraParams look_at_camera(const Vec3& center, const CameraConfig& cfg = {}) {
  const Vec3 to_target = cfg.lookat - center;
  if (!(to_target.norm() > 0.0)) throw ValidationError("camera center coincides with the look-at point");
  const Vec3 forward = to_target.normalized();
  const Vec3 side = forward.cross(cfg.up);
  if (side.norm() < 1e-9) throw ValidationError("camera view direction is parallel to the up vector");
  const Vec3 right = side.normalized();
  const Vec3 down = forward.cross(right);
  CameraParams c;
  Mat3 r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  c.extrinsic.setIdentity();
  c.extrinsic.block<3, 3>(0, 0) = r;
  c.extrinsic.block<3, 1>(0, 3) = -(r * center);
  c.intrinsic = cfg.intrinsic();
  return c;
}

inline CameraParams camera_from_spherical(double mu, double nu, const CameraConfig& cfg = {}) {
  if (!std::isfinite(mu) || !std::isfinite(nu)) throw ValidationError("camera angles must be finite");
  if (!(nu > 0.0 && nu < kPi)) throw ValidationError("camera pitch nu must lie strictly inside (0, pi)");
  return look_at_camera(cfg.lookat + cfg.radius * sphere_direction(mu, nu), cfg);
}

inline CameraParams camera_from_spherical(const SphericalPose& s, const CameraConfig& cfg = {}) {
  return camera_from_spherical(s.mu, s.nu, cfg);
}

inline SphericalPose spherical_from_camera(const CameraParams& c, const CameraConfig& cfg = {}) {
  const Vec3 d = c.center() - cfg.lookat;
  const double r = d.norm();
  if (!std::isfinite(r) || std::abs(r - cfg.radius) > 1e-3) {
    throw ValidationError("camera is off the view sphere (distance " + std::to_string(r) + ")");
  }
  SphericalPose s;
  s.radius = r;
  s.nu = std::acos(std::clamp(d.y() / r, -1.0, 1.0));
  if (!(s.nu > 0.0 && s.nu < kPi) || std::hypot(d.x(), d.z()) < 1e-12) {
    throw ValidationError("camera sits on a pole of the view sphere");
  }
  s.mu = std::atan2(d.z(), -d.x());
  return s;
}

/// Mirror across the x = 0 plane: world and image are both reflected, so mu -> pi - mu.
inline CameraParams flip_camera(const CameraParams& c) {
  const Mat3 m = Vec3(-1.0, 1.0, 1.0).asDiagonal();
  CameraParams out = c;
  const Mat3 r = m * c.rotation() * m;  // flips image x and world x
  out.extrinsic.block<3, 3>(0, 0) = r;
  out.extrinsic.block<3, 1>(0, 3) = m * c.translation();
  return out;
}

/// True when the camera is on the subject's right-hand side, mu in [-pi/2, pi/2].
inline bool needs_flip(const CameraParams& c, const CameraConfig& cfg = {}) {
  const double mu = spherical_from_camera(c, cfg).mu;
  return std::abs(mu) <= kPi / 2 + 1e-12;
}

/// Ray through the centre of pixel (col, row).
inline Ray pixel_ray(const CameraParams& c, int col, int row, int width, int height) {
  const double u = (col + 0.5) / width;
  const double v = (row + 0.5) / height;
  const Mat3& k = c.intrinsic;
  const Vec3 d_cam((u - k(0, 2)) / k(0, 0), (v - k(1, 2)) / k(1, 1), 1.0);
  Ray ray;
  ray.origin = c.center();
  ray.direction = (c.rotation().transpose() * d_cam).normalized();
  return ray;
}

/// One ray per pixel, row-major from the top-left pixel.
inline std::vector<Ray> generate_rays(const CameraParams& c, int width, int height) {
  if (width < 1 || height < 1) throw ValidationError("image dimensions must be positive");
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(width) * height);
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) rays.push_back(pixel_ray(c, col, row, width, height));
  }
  return rays;
}

/// Projects a world point to pixel coordinates (x right, y down); z_cam <= 0 gives nullopt.
inline std::optional<Vec2> project(const CameraParams& c, const Vec3& x, int width, int height) {
  const Vec3 pc = c.rotation() * x + c.translation();
  if (!(pc.z() > 0.0)) return std::nullopt;
  const Vec3 uv = c.intrinsic * (pc / pc.z());
  return Vec2(uv.x() * width, uv.y() * height);
}

// ---------------------------------------------------------------------------------------------
// JSON

inline nlohmann::json camera_to_json(const CameraParams& c, const CameraConfig& cfg = {}) {
  const auto a = c.to_array();
  nlohmann::json j;
  j["extrinsic"] = std::vector<double>(a.begin(), a.begin() + 16);
  j["intrinsic"] = std::vector<double>(a.begin() + 16, a.end());
  try {
    const SphericalPose s = spherical_from_camera(c, cfg);
    j["mu"] = s.mu;
    j["nu"] = s.nu;
  } catch (const ValidationError&) {
  }
  return j;
}

/// Accepts {extrinsic[16], intrinsic[9]}, a flat c[25] array, or {mu, nu}.
inline CameraParams camera_from_json(const nlohmann::json& j, const CameraConfig& cfg = {}) {
  try {
    if (j.is_array()) {
      const auto v = j.get<std::vector<double>>();
      if (v.size() != 25) throw ValidationError("camera array must have 25 entries");
      std::array<double, 25> a{};
      std::copy(v.begin(), v.end(), a.begin());
      const CameraParams c = CameraParams::from_array(a);
      c.validate(cfg);
      return c;
    }
    if (j.contains("extrinsic")) {
      const auto e = j.at("extrinsic").get<std::vector<double>>();
      if (e.size() != 16) throw ValidationError("camera extrinsic must have 16 entries");
      std::array<double, 25> a{};
      std::copy(e.begin(), e.end(), a.begin());
      const auto k = j.contains("intrinsic") ? j.at("intrinsic").get<std::vector<double>>() : std::vector<double>{};
      if (!k.empty() && k.size() != 9) throw ValidationError("camera intrinsic must have 9 entries");
      const Mat3 kk = cfg.intrinsic();
      for (int i = 0; i < 9; ++i) a[16 + i] = k.empty() ? kk(i / 3, i % 3) : k[i];
      const CameraParams c = CameraParams::from_array(a);
      c.validate(cfg);
      return c;
    }
    if (j.contains("mu") && j.contains("nu")) {
      return camera_from_spherical(j.at("mu").get<double>(), j.at("nu").get<double>(), cfg);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed camera JSON: ") + e.what());
  }
  throw ValidationError("camera JSON needs extrinsic/intrinsic or mu/nu");
}

inline CameraParams load_camera(const std::string& path, const CameraConfig& cfg = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open camera '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("camera '" + path + "': " + e.what());
  }
  return camera_from_json(j, cfg);
}

inline void save_camera(const std::string& path, const CameraParams& c, const CameraConfig& cfg = {}) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write camera '" + path + "'");
  out << camera_to_json(c, cfg).dump(2) << "\n";
}

}  // namespace hsf

// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Dataset alignment: upstream full-body estimates to normalized cameras, neck/head poses
// and a uniform crop.
//
// For each record the neck/head pose p is read from theta, a similarity transform
// x -> s R x + t is fitted in closed form (Umeyama) from the estimated head, neck and
// shoulder joints onto the joints of the template posed by p, the estimator camera is
// carried through the same transform, and the result is renormalized onto the view sphere:
// the camera keeps its direction from the look-at point, moves to radius r, looks at the
// look-at point and takes the fixed intrinsics.
#pragma once

#include "hsf/body_model.hpp"
#include "hsf/camera.hpp"
#include "hsf/image.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace hsf {

inline constexpr std::array<const char*, 4> kAlignmentJoints = {joint_names::kNeck, joint_names::kHead,
                                                                 joint_names::kLeftShoulder,
                                                                 joint_names::kRightShoulder};

/// Closed-form least-squares fit of dst ~ s R src + t. With allow_scale false, s = 1.
inline RigidTransform fit_similarity(const std::vector<Vec3>& src, const std::vector<Vec3>& dst,
                                          bool allow_scale = true) {
  if (src.size() != dst.size() || src.size() < 3) throw ValidationError("similarity fit needs >= 3 paired points");
  const double n = static_cast<double>(src.size());
  Vec3 mu_s = Vec3::Zero(), mu_d = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mu_s += src[i];
    mu_d += dst[i];
  }
  mu_s /= n;
  mu_d /= n;
  Mat3 cov = Mat3::Zero();
  Mat3 src_spread = Mat3::Zero();
  double var_s = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec3 a = src[i] - mu_s;
    const Vec3 b = dst[i] - mu_d;
    cov += b * a.transpose();
    src_spread += a * a.transpose();
    var_s += a.squaredNorm();
  }
  if (!cov.allFinite()) throw NumericError("non-finite joint positions");
  const Eigen::SelfAdjointEigenSolver<Mat3> spread(src_spread);
  const Vec3 ev = spread.eigenvalues();  // ascending
  if (!(ev[2] > 0.0) || ev[1] < 1e-10 * ev[2]) {
    throw ValidationError("degenerate joint configuration (joints coincide or are collinear)");
  }
  cov /= n;
  var_s /= n;
  const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  RigidTransform s;
  s.rotation = svd.matrixU() * d * svd.matrixV().transpose();
  s.scale = allow_scale ? (svd.singularValues().asDiagonal() * d).trace() / var_s : 1.0;
  if (!(s.scale > 0.0) || !std::isfinite(s.scale)) throw NumericError("similarity fit produced a non-positive scale");
  s.translation = mu_d - s.scale * (s.rotation * mu_s);
  return s;
}

/// Estimator camera expressed in the frame reached by x -> T(x); projections are unchanged.
inline CameraParams transform_camera(const CameraParams& c, const RigidTransform& t) {
  CameraParams out = c;
  const Mat3 r = c.rotation() * t.rotation.transpose();
  out.extrinsic.block<3, 3>(0, 0) = r;
  out.extrinsic.block<3, 1>(0, 3) = t.scale * c.translation() - r * t.translation;
  return out;
}

/// Moves the camera onto the view sphere along its direction from the look-at point.
inline CameraParams normalize_camera(const CameraParams& c, const CameraConfig& cfg = {}) {
  const Vec3 d = c.center() - cfg.lookat;
  const double r = d.norm();
  if (!(r > 0.0) || !std::isfinite(r)) throw NumericError("camera center is at the look-at point");
  const double nu = std::acos(std::clamp(d.y() / r, -1.0, 1.0));
  if (!(nu > 0.0 && nu < kPi) || std::hypot(d.x(), d.z()) < 1e-12 * r) {
    throw ValidationError("aligned camera lies on a pole of the view sphere");
  }
  return camera_from_spherical(std::atan2(d.z(), -d.x()), nu, cfg);
}

struct CropRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  /// The uniform region reached past the image border and was clamped.
  bool clamped = false;

  bool operator==(const CropRect&) const = default;
};

/// Head, neck and shoulder region of the template in canonical coordinates.
inline Eigen::AlignedBox3d crop_region() { return {Vec3(-0.22, -0.19, -0.15), Vec3(0.22, 0.31, 0.15)}; }

/// Square bounding the projected crop region, in pixels of an image of the given size.
inline CropRect compute_crop(const CameraParams& camera, int image_width, int image_height) {
  if (image_width < 1 || image_height < 1) throw ValidationError("image size must be positive");
  const auto box = crop_region();
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  for (int k = 0; k < 8; ++k) {
    const auto p = project(camera, box.corner(static_cast<Eigen::AlignedBox3d::CornerType>(k)), image_width,
                           image_height);
    if (!p) throw ValidationError("crop region lies behind the camera");
    x0 = std::min(x0, p->x());
    x1 = std::max(x1, p->x());
    y0 = std::min(y0, p->y());
    y1 = std::max(y1, p->y());
  }
  const double side = std::max(x1 - x0, y1 - y0);
  const double cx = 0.5 * (x0 + x1);
  const double cy = 0.5 * (y0 + y1);
  const auto left = static_cast<long>(std::floor(cx - 0.5 * side + 0.5));
  const auto top = static_cast<long>(std::floor(cy - 0.5 * side + 0.5));
  const auto extent = static_cast<long>(std::floor(side + 0.5));
  CropRect rect;
  const long l = std::clamp(left, 0L, static_cast<long>(image_width));
  const long t = std::clamp(top, 0L, static_cast<long>(image_height));
  const long r = std::clamp(left + extent, 0L, static_cast<long>(image_width));
  const long b = std::clamp(top + extent, 0L, static_cast<long>(image_height));
  rect.clamped = l != left || t != top || r != left + extent || b != top + extent;
  rect.x = static_cast<int>(l);
  rect.y = static_cast<int>(t);
  rect.width = static_cast<int>(r - l);
  rect.height = static_cast<int>(b - t);
  return rect;
}

struct AlignmentInput {
  FullBodyParams body;
  CameraParams fixed_camera;
  int image_width = 512;
  int image_height = 512;
  /// Estimated joints keyed like kAlignmentJoints; computed from body when absent.
  std::optional<std::array<Vec3, 4>> joints;
  std::string image_path;
};

struct AlignmentOptions {
  bool allow_scale = true;
  CameraConfig camera;
};

struct AlignmentResult {
  CameraParams camera;
  BodyPose pose;
  RigidTransform transform;  // estimated -> template
  CropRect crop;
  double residual = 0.0;  // RMS joint distance after the fit, scene units
};

inline std::array<Vec3, 4> alignment_joints(const RiggedTemplate& rig, const BodyPose& pose) {
  const auto posed = pose_joints(rig, pose);
  std::array<Vec3, 4> out;
  for (std::size_t i = 0; i < kAlignmentJoints.size(); ++i) out[i] = posed[rig.joint_index(kAlignmentJoints[i])];
  return out;
}

/// Stand-in estimator output: template joints posed by theta, rotated by rot, moved by trans.
/// The stand-in body has no shape space, so beta is not used.
inline std::array<Vec3, 4> estimated_joints(const FullBodyParams& body, const RiggedTemplate& rig) {
  body.validate();
  const Mat3 r = rotation_from_axis_angle(body.rot);
  auto joints = alignment_joints(rig, extract_neck_head_pose(body));
  for (auto& j : joints) j = r * j + body.trans;
  return joints;
}

inline AlignmentResult solve_alignment(const AlignmentInput& input, const RiggedTemplate& rig,
                                       const AlignmentOptions& options = {}) {
  input.body.validate();
  if (!input.fixed_camera.extrinsic.allFinite()) throw ValidationError("estimator camera is not finite");
  AlignmentResult res;
  res.pose = extract_neck_head_pose(input.body);
  const auto est = input.joints ? *input.joints : estimated_joints(input.body, rig);
  const auto target = alignment_joints(rig, res.pose);
  const std::vector<Vec3> src(est.begin(), est.end());
  const std::vector<Vec3> dst(target.begin(), target.end());
  res.transform = fit_similarity(src, dst, options.allow_scale);
  double sq = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) sq += (res.transform.apply(src[i]) - dst[i]).squaredNorm();
  res.residual = std::sqrt(sq / static_cast<double>(src.size()));
  res.camera = normalize_camera(transform_camera(input.fixed_camera, res.transform), options.camera);
  res.crop = compute_crop(res.camera, input.image_width, input.image_height);
  return res;
}

// ---------------------------------------------------------------------------------------------
// Overlay

namespace detail {

inline void draw_line(Image& img, const Vec2& a, const Vec2& b, const Vec3& color) {
  const int steps = static_cast<int>(std::ceil(std::max(std::abs(b.x() - a.x()), std::abs(b.y() - a.y())))) + 1;
  for (int s = 0; s <= steps; ++s) {
    const Vec2 p = a + (b - a) * (static_cast<double>(s) / steps);
    const int x = static_cast<int>(std::floor(p.x()));
    const int y = static_cast<int>(std::floor(p.y()));
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) continue;
    for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[c];
  }
}

}  // namespace detail

/// Wireframe of the template posed by result.pose drawn over image. An empty image is
/// replaced by a black one of the given size.
inline Image render_overlay(const AlignmentResult& result, const RiggedTemplate& rig, const Image& image,
                            int width = 512, int height = 512, const Vec3& color = Vec3(0.1, 1.0, 0.2)) {
  Image out = image.empty() ? Image(width, height, 3) : image;
  if (out.channels != 3) throw ValidationError("overlay needs an RGB image");
  const auto verts = pose_vertices(rig, result.pose);
  std::vector<std::optional<Vec2>> px(verts.size());
  for (std::size_t v = 0; v < verts.size(); ++v) px[v] = project(result.camera, verts[v], out.width, out.height);
  for (const auto& f : rig.mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      const auto& a = px[f[k]];
      const auto& b = px[f[(k + 1) % 3]];
      if (a && b) detail::draw_line(out, *a, *b, color);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// JSON-lines records

/// Estimator cameras carry their own intrinsics, so only the extrinsic is checked.
inline CameraParams estimator_camera_from_json(const nlohmann::json& j) {
  std::vector<double> e, k;
  if (j.is_array()) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 25) throw ValidationError("camera array must have 25 entries");
    e.assign(v.begin(), v.begin() + 16);
    k.assign(v.begin() + 16, v.end());
  } else {
    e = j.at("extrinsic").get<std::vector<double>>();
    if (j.contains("intrinsic")) k = j.at("intrinsic").get<std::vector<double>>();
  }
  if (e.size() != 16) throw ValidationError("camera extrinsic must have 16 entries");
  if (!k.empty() && k.size() != 9) throw ValidationError("camera intrinsic must have 9 entries");
  std::array<double, 25> a{};
  std::copy(e.begin(), e.end(), a.begin());
  const Mat3 kk = CameraConfig{}.intrinsic();
  for (int i = 0; i < 9; ++i) a[16 + i] = k.empty() ? kk(i / 3, i % 3) : k[i];
  CameraParams c = CameraParams::from_array(a);
  CameraParams probe = c;
  probe.intrinsic = CameraConfig{}.intrinsic();
  probe.validate();
  if (!c.intrinsic.allFinite() || !(c.intrinsic(0, 0) > 0.0) || !(c.intrinsic(1, 1) > 0.0)) {
    throw ValidationError("estimator camera intrinsics must be finite with positive focal lengths");
  }
  return c;
}

inline nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

inline Vec3 vec_from_json(const nlohmann::json& j, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw ValidationError(std::string(what) + " must have 3 entries");
  return {v[0], v[1], v[2]};
}

/// {trans[3], rot[3], beta[10], theta[69], camera, image_path, image_size?[2], joints?{name: [3]}}
inline AlignmentInput alignment_input_from_json(const nlohmann::json& j) {
  try {
    AlignmentInput in;
    in.body.trans = vec_from_json(j.at("trans"), "trans");
    in.body.rot = vec_from_json(j.at("rot"), "rot");
    in.body.beta = j.at("beta").get<std::vector<double>>();
    in.body.theta = j.at("theta").get<std::vector<double>>();
    in.body.validate();
    in.fixed_camera = estimator_camera_from_json(j.at("camera"));
    in.image_path = j.value("image_path", std::string());
    if (j.contains("image_size")) {
      const auto s = j.at("image_size").get<std::vector<int>>();
      if (s.size() != 2 || s[0] < 1 || s[1] < 1) throw ValidationError("image_size must be [width, height]");
      in.image_width = s[0];
      in.image_height = s[1];
    }
    if (j.contains("joints")) {
      std::array<Vec3, 4> joints;
      for (std::size_t i = 0; i < kAlignmentJoints.size(); ++i) {
        joints[i] = vec_from_json(j.at("joints").at(kAlignmentJoints[i]), kAlignmentJoints[i]);
      }
      in.joints = joints;
    }
    return in;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed alignment record: ") + e.what());
  }
}

inline nlohmann::json alignment_input_to_json(const AlignmentInput& in) {
  nlohmann::json j;
  j["trans"] = vec_json(in.body.trans);
  j["rot"] = vec_json(in.body.rot);
  j["beta"] = in.body.beta;
  j["theta"] = in.body.theta;
  const auto c = in.fixed_camera.to_array();
  j["camera"] = {{"extrinsic", std::vector<double>(c.begin(), c.begin() + 16)},
                 {"intrinsic", std::vector<double>(c.begin() + 16, c.end())}};
  j["image_path"] = in.image_path;
  j["image_size"] = {in.image_width, in.image_height};
  if (in.joints) {
    nlohmann::json joints;
    for (std::size_t i = 0; i < kAlignmentJoints.size(); ++i) joints[kAlignmentJoints[i]] = vec_json((*in.joints)[i]);
    j["joints"] = joints;
  }
  return j;
}

/// Label layout: camera c[25] (extrinsic then intrinsic, row-major) and pose p[6] (neck, head).
inline nlohmann::json alignment_result_to_json(const AlignmentResult& r, const std::string& image_path = {}) {
  const auto c = r.camera.to_array();
  const auto p = r.pose.as_array();
  nlohmann::json j;
  j["camera"] = std::vector<double>(c.begin(), c.end());
  j["pose"] = std::vector<double>(p.begin(), p.end());
  j["crop"] = {{"x", r.crop.x}, {"y", r.crop.y}, {"width", r.crop.width}, {"height", r.crop.height},
               {"clamped", r.crop.clamped}};
  j["residual"] = r.residual;
  j["scale"] = r.transform.scale;
  if (!image_path.empty()) j["image_path"] = image_path;
  return j;
}

struct AlignmentBatchStats {
  int ok = 0;
  int failed = 0;
};

/// Aligns every record of a JSON-lines stream. Bad records produce {"line", "error"} entries
/// and do not stop the run; blank lines are skipped.
template <typename OnResult>
AlignmentBatchStats align_jsonl(std::istream& in, std::ostream& out, const RiggedTemplate& rig,
                                const AlignmentOptions& options, OnResult&& on_result) {
  AlignmentBatchStats stats;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("invalid JSON: ") + e.what());
      }
      const AlignmentInput input = alignment_input_from_json(j);
      const AlignmentResult res = solve_alignment(input, rig, options);
      nlohmann::json o = alignment_result_to_json(res, input.image_path);
      o["line"] = line_no;
      out << o.dump() << "\n";
      on_result(line_no, input, res);
      ++stats.ok;
    } catch (const Error& e) {
      out << nlohmann::json{{"line", line_no}, {"error", e.what()}}.dump() << "\n";
      ++stats.failed;
    }
  }
  return stats;
}

inline AlignmentBatchStats align_jsonl(std::istream& in, std::ostream& out, const RiggedTemplate& rig,
                                       const AlignmentOptions& options = {}) {
  return align_jsonl(in, out, rig, options, [](int, const AlignmentInput&, const AlignmentResult&) {});
}

}  // namespace hsf

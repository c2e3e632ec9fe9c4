// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Rigged body template, neck/head posing by linear blend skinning, and pose utilities.
//
// Rig file layout: `<name>.obj` carries the mesh; `<name>.rig.json` carries
//   { "joints":  [ {"name": str, "position": [x,y,z], "parent": int}, ... ],
//     "weights": [ [vertex, joint, weight], ... ] }
// Joints are listed parent-first (parent index < own index, root has parent -1).
#pragma once

#include "hsf/mesh.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace hsf {

namespace joint_names {
inline constexpr const char* kPelvis = "pelvis";
inline constexpr const char* kSpine = "spine3";
inline constexpr const char* kNeck = "neck";
inline constexpr const char* kHead = "head";
inline constexpr const char* kLeftShoulder = "left_shoulder";
inline constexpr const char* kRightShoulder = "right_shoulder";
}  // namespace joint_names

struct Joint {
  std::string name;
  Vec3 position = Vec3::Zero();
  int parent = -1;
};

struct SkinWeight {
  std::uint32_t joint = 0;
  double weight = 0.0;
};

struct RiggedTemplate {
  TriangleMesh mesh;
  std::vector<Joint> joints;
  /// Sparse weights, one list per vertex.
  std::vector<std::vector<SkinWeight>> weights;

  int find_joint(const std::string& name) const {
    for (std::size_t j = 0; j < joints.size(); ++j) {
      if (joints[j].name == name) return static_cast<int>(j);
    }
    return -1;
  }

  int joint_index(const std::string& name) const {
    const int j = find_joint(name);
    if (j < 0) throw ValidationError("rig is missing required joint '" + name + "'");
    return j;
  }

  /// Throws ValidationError describing the first violated invariant.
  void validate() const {
    mesh.validate();
    for (const char* name : {joint_names::kPelvis, joint_names::kNeck, joint_names::kHead, joint_names::kLeftShoulder,
                             joint_names::kRightShoulder}) {
      joint_index(name);
    }
    for (std::size_t j = 0; j < joints.size(); ++j) {
      const int p = joints[j].parent;
      if (p >= static_cast<int>(j)) {
        throw ValidationError("joint '" + joints[j].name + "' must be listed after its parent");
      }
      if (p < -1) throw ValidationError("joint '" + joints[j].name + "' has invalid parent index");
      if (!joints[j].position.allFinite()) throw ValidationError("joint '" + joints[j].name + "' is not finite");
    }
    if (joints.empty() || joints[0].parent != -1) throw ValidationError("first joint must be the root");
    if (weights.size() != mesh.num_vertices()) {
      throw ValidationError("skin weights cover " + std::to_string(weights.size()) + " vertices, mesh has " +
                            std::to_string(mesh.num_vertices()));
    }
    for (std::size_t v = 0; v < weights.size(); ++v) {
      double sum = 0.0;
      for (const auto& sw : weights[v]) {
        if (sw.joint >= joints.size()) throw ValidationError("vertex " + std::to_string(v) + " weight on unknown joint");
        if (!(sw.weight >= 0.0)) throw ValidationError("vertex " + std::to_string(v) + " has a negative weight");
        sum += sw.weight;
      }
      if (std::abs(sum - 1.0) > 1e-6) {
        throw ValidationError("vertex " + std::to_string(v) + " weights sum to " + std::to_string(sum));
      }
    }
    const Vec3 neck = joints[joint_index(joint_names::kNeck)].position;
    if (neck.norm() > 1e-6) throw ValidationError("neck joint is not at the origin");
  }

  /// Translates the whole rig so the neck joint sits at the origin.
  void center_on_neck() {
    const Vec3 neck = joints[joint_index(joint_names::kNeck)].position;
    if (neck.isZero(0.0)) return;
    for (auto& v : mesh.vertices) v -= neck;
    for (auto& j : joints) j.position -= neck;
  }
};

/// Neck and head rotations as axis-angle vectors (radians).
struct BodyPose {
  Vec3 neck = Vec3::Zero();
  Vec3 head = Vec3::Zero();

  bool is_neutral() const { return neck.isZero(0.0) && head.isZero(0.0); }
  bool is_finite() const { return neck.allFinite() && head.allFinite(); }
  /// True when any component exceeds pi in magnitude (allowed, but unusual).
  bool is_extreme() const { return neck.cwiseAbs().maxCoeff() > kPi || head.cwiseAbs().maxCoeff() > kPi; }

  std::array<double, 6> as_array() const { return {neck.x(), neck.y(), neck.z(), head.x(), head.y(), head.z()}; }
  static BodyPose from_array(const std::array<double, 6>& a) {
    return {Vec3(a[0], a[1], a[2]), Vec3(a[3], a[4], a[5])};
  }
  bool operator==(const BodyPose& o) const { return neck == o.neck && head == o.head; }
};

struct PosedMesh {
  TriangleMesh mesh;
  BodyPose pose;
  std::shared_ptr<const RiggedTemplate> canonical;
};

/// Upstream full-body parameters: translation, global rotation, 10 shape and 69 pose values.
struct FullBodyParams {
  Vec3 trans = Vec3::Zero();
  Vec3 rot = Vec3::Zero();
  std::vector<double> beta = std::vector<double>(10, 0.0);
  std::vector<double> theta = std::vector<double>(69, 0.0);

  void validate() const {
    if (beta.size() != 10) throw ValidationError("beta must have 10 entries, got " + std::to_string(beta.size()));
    if (theta.size() != 69) throw ValidationError("theta must have 69 entries, got " + std::to_string(theta.size()));
  }
};

/// Body-joint ids in the 24-joint kinematic tree; theta stores joints 1..23 (root excluded).
inline constexpr int kNeckJointId = 12;
inline constexpr int kHeadJointId = 15;
inline constexpr std::size_t theta_offset(int joint_id) { return static_cast<std::size_t>(joint_id - 1) * 3; }

inline BodyPose extract_neck_head_pose(const FullBodyParams& params) {
  params.validate();
  const auto& t = params.theta;
  const std::size_t n = theta_offset(kNeckJointId);
  const std::size_t h = theta_offset(kHeadJointId);
  return {Vec3(t[n], t[n + 1], t[n + 2]), Vec3(t[h], t[h + 1], t[h + 2])};
}

/// Writes the pose into the neck/head slots of theta, leaving other entries untouched.
inline void embed_neck_head_pose(FullBodyParams& params, const BodyPose& pose) {
  params.validate();
  const std::size_t n = theta_offset(kNeckJointId);
  const std::size_t h = theta_offset(kHeadJointId);
  for (int k = 0; k < 3; ++k) {
    params.theta[n + k] = pose.neck[k];
    params.theta[h + k] = pose.head[k];
  }
}

/// Mirror across the x = 0 plane: (ax, ay, az) -> (ax, -ay, -az) for both rotations.
inline BodyPose flip_pose(const BodyPose& p) {
  return {Vec3(p.neck.x(), -p.neck.y(), -p.neck.z()), Vec3(p.head.x(), -p.head.y(), -p.head.z())};
}

/// Per-joint world transforms x -> rotation * x + translation, plus whether the joint moves at all.
struct JointTransforms {
  std::vector<Mat3> rotation;
  std::vector<Vec3> translation;
  std::vector<bool> moves;
};

inline JointTransforms joint_transforms(const RiggedTemplate& rig, const BodyPose& pose) {
  const std::size_t n = rig.joints.size();
  const int neck = rig.joint_index(joint_names::kNeck);
  const int head = rig.joint_index(joint_names::kHead);
  JointTransforms out;
  out.rotation.assign(n, Mat3::Identity());
  out.translation.assign(n, Vec3::Zero());
  out.moves.assign(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    Vec3 local_aa = Vec3::Zero();
    if (static_cast<int>(j) == neck) local_aa = pose.neck;
    if (static_cast<int>(j) == head) local_aa = pose.head;
    const bool local_moves = !local_aa.isZero(0.0);
    // Local transform about the joint pivot c: x -> R (x - c) + c.
    const Mat3 r_local = rotation_from_axis_angle(local_aa);
    const Vec3 c = rig.joints[j].position;
    const Vec3 t_local = c - r_local * c;
    const int p = rig.joints[j].parent;
    if (p < 0) {
      out.rotation[j] = r_local;
      out.translation[j] = t_local;
      out.moves[j] = local_moves;
    } else {
      out.rotation[j] = out.rotation[p] * r_local;
      out.translation[j] = out.rotation[p] * t_local + out.translation[p];
      out.moves[j] = local_moves || out.moves[p];
    }
  }
  return out;
}

/// Linear blend skinning of template vertices. Only the neck and head joints rotate.
inline std::vector<Vec3> pose_vertices(const RiggedTemplate& rig, const BodyPose& pose) {
  if (!pose.is_finite()) throw ValidationError("pose is not finite");
  std::vector<Vec3> out = rig.mesh.vertices;
  if (pose.is_neutral()) return out;
  const JointTransforms xf = joint_transforms(rig, pose);
  for (std::size_t v = 0; v < out.size(); ++v) {
    const Vec3 rest = rig.mesh.vertices[v];
    Vec3 delta = Vec3::Zero();
    for (const auto& sw : rig.weights[v]) {
      if (!xf.moves[sw.joint]) continue;
      delta += sw.weight * (xf.rotation[sw.joint] * rest + xf.translation[sw.joint] - rest);
    }
    out[v] = rest + delta;
  }
  return out;
}

inline std::vector<Vec3> pose_joints(const RiggedTemplate& rig, const BodyPose& pose) {
  const JointTransforms xf = joint_transforms(rig, pose);
  std::vector<Vec3> out(rig.joints.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = xf.moves[j] ? Vec3(xf.rotation[j] * rig.joints[j].position + xf.translation[j]) : rig.joints[j].position;
  }
  return out;
}

inline PosedMesh pose_mesh(std::shared_ptr<const RiggedTemplate> rig, const BodyPose& pose) {
  PosedMesh out;
  out.mesh.faces = rig->mesh.faces;
  out.mesh.vertices = pose_vertices(*rig, pose);
  out.pose = pose;
  out.canonical = std::move(rig);
  return out;
}

/// Mirror image of a rig across x = 0: positions negated in x, winding reversed, left/right names swapped.
inline RiggedTemplate mirror_template(const RiggedTemplate& rig) {
  RiggedTemplate out = rig;
  for (auto& v : out.mesh.vertices) v.x() = -v.x();
  for (auto& f : out.mesh.faces) std::swap(f[1], f[2]);
  for (auto& j : out.joints) {
    j.position.x() = -j.position.x();
    if (j.name.rfind("left_", 0) == 0) {
      j.name = "right_" + j.name.substr(5);
    } else if (j.name.rfind("right_", 0) == 0) {
      j.name = "left_" + j.name.substr(6);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Rig file I/O

inline std::string rig_sidecar_path(const std::string& obj_path) {
  std::filesystem::path p(obj_path);
  p.replace_extension(".rig.json");
  return p.string();
}

inline RiggedTemplate load_template(const std::string& obj_path) {
  RiggedTemplate rig;
  rig.mesh = load_obj(obj_path);
  const std::string sidecar = rig_sidecar_path(obj_path);
  std::ifstream in(sidecar);
  if (!in) throw IoError("cannot open rig sidecar '" + sidecar + "'");
  nlohmann::json doc;
  try {
    in >> doc;
    for (const auto& j : doc.at("joints")) {
      Joint joint;
      joint.name = j.at("name").get<std::string>();
      const auto pos = j.at("position").get<std::vector<double>>();
      if (pos.size() != 3) throw ValidationError("joint '" + joint.name + "' position needs 3 values");
      joint.position = Vec3(pos[0], pos[1], pos[2]);
      joint.parent = j.at("parent").get<int>();
      rig.joints.push_back(joint);
    }
    rig.weights.assign(rig.mesh.num_vertices(), {});
    for (const auto& w : doc.at("weights")) {
      const auto v = w.at(0).get<std::int64_t>();
      const auto j = w.at(1).get<std::int64_t>();
      const double weight = w.at(2).get<double>();
      if (v < 0 || static_cast<std::size_t>(v) >= rig.weights.size()) {
        throw ValidationError("weight references vertex " + std::to_string(v) + " out of range");
      }
      if (j < 0) throw ValidationError("weight references a negative joint index");
      rig.weights[static_cast<std::size_t>(v)].push_back({static_cast<std::uint32_t>(j), weight});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed rig sidecar '" + sidecar + "': " + e.what());
  }
  rig.center_on_neck();
  rig.validate();
  return rig;
}

inline void save_template(const std::string& obj_path, const RiggedTemplate& rig) {
  save_obj(obj_path, rig.mesh);
  nlohmann::json doc;
  doc["joints"] = nlohmann::json::array();
  for (const auto& j : rig.joints) {
    doc["joints"].push_back(
        {{"name", j.name}, {"position", {j.position.x(), j.position.y(), j.position.z()}}, {"parent", j.parent}});
  }
  doc["weights"] = nlohmann::json::array();
  for (std::size_t v = 0; v < rig.weights.size(); ++v) {
    for (const auto& sw : rig.weights[v]) doc["weights"].push_back({v, sw.joint, sw.weight});
  }
  const std::string sidecar = rig_sidecar_path(obj_path);
  std::ofstream out(sidecar);
  if (!out) throw IoError("cannot write rig sidecar '" + sidecar + "'");
  out << doc.dump(1) << '\n';
}

inline BodyPose load_pose(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pose file '" + path + "'");
  try {
    nlohmann::json doc;
    in >> doc;
    const auto n = doc.at("p_n").get<std::vector<double>>();
    const auto h = doc.at("p_h").get<std::vector<double>>();
    if (n.size() != 3 || h.size() != 3) throw ValidationError("pose file '" + path + "': p_n and p_h need 3 values");
    return {Vec3(n[0], n[1], n[2]), Vec3(h[0], h[1], h[2])};
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed pose file '" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------------------------
// Procedural stand-in template

namespace detail {

inline double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

/// One horizontal cross-section of the body tube: superellipse with half-widths (a, b) and exponent n.
struct Section {
  double y, a, b, zc, n;
};

inline Section interpolate_section(const std::vector<Section>& keys, double y) {
  if (y <= keys.front().y) return keys.front();
  for (std::size_t k = 0; k + 1 < keys.size(); ++k) {
    const Section& s0 = keys[k];
    const Section& s1 = keys[k + 1];
    if (y <= s1.y) {
      const double t = smoothstep(s0.y, s1.y, y);
      auto mix = [t](double p, double q) { return p + (q - p) * t; };
      return {y, mix(s0.a, s1.a), mix(s0.b, s1.b), mix(s0.zc, s1.zc), mix(s0.n, s1.n)};
    }
  }
  return keys.back();
}

inline double superellipse_coord(double c, double n) {
  return (c < 0.0 ? -1.0 : 1.0) * std::pow(std::abs(c), 2.0 / n);
}

/// Cross-section key frames of the stand-in body, bottom to top.
inline std::vector<Section> standin_sections(double head_scale = 1.0, double shoulder_scale = 1.0) {
  const double hs = head_scale;
  const double ss = shoulder_scale;
  // y, half-width x, half-depth z, z-centre, superellipse exponent
  return {
      {-0.60, 0.10, 0.07, 0.0, 2.5},
      {-0.57, 0.155 * ss, 0.095, 0.0, 3.0},
      {-0.20, 0.170 * ss, 0.105, 0.0, 3.0},
      {-0.07, 0.195 * ss, 0.095, 0.0, 3.2},
      {-0.02, 0.145 * ss, 0.075, 0.0, 2.6},
      {0.015, 0.058, 0.055, 0.0, 2.0},
      {0.100, 0.052, 0.052, 0.006, 2.0},
      {0.135 * hs, 0.070 * hs, 0.085 * hs, 0.020, 2.0},
      {0.200 * hs, 0.085 * hs, 0.100 * hs, 0.020, 2.0},
      {0.270 * hs, 0.082 * hs, 0.095 * hs, 0.015, 2.0},
      {0.330 * hs, 0.060 * hs, 0.070 * hs, 0.010, 2.0},
      {0.365 * hs, 0.025 * hs, 0.030 * hs, 0.005, 2.0},
      {0.375 * hs, 0.0, 0.0, 0.005, 2.0},
  };
}

}  // namespace detail

/// Watertight head, neck, shoulder and upper-torso tube, bilaterally symmetric about x = 0.
/// detail_level 1 gives 5000 faces; each extra level doubles the ring and segment counts.
inline RiggedTemplate generate_standin_template(std::uint64_t seed = 0, int detail_level = 1) {
  using detail::Section;
  if (detail_level < 1) throw ValidationError("detail_level must be >= 1");

  double head_scale = 1.0;
  double shoulder_scale = 1.0;
  if (seed != 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(0.96, 1.04);
    head_scale = jitter(rng);
    shoulder_scale = jitter(rng);
  }
  const double hs = head_scale;
  const double ss = shoulder_scale;

  const std::vector<Section> keys = detail::standin_sections(hs, ss);
  const double y_bottom = keys.front().y;
  const double y_top = keys.back().y;

  const int rings = 50 * detail_level;     // interior rings (poles excluded)
  const int segments = 50 * detail_level;  // vertices per ring

  RiggedTemplate rig;
  auto& verts = rig.mesh.vertices;
  auto& faces = rig.mesh.faces;
  verts.push_back(Vec3(0.0, y_bottom, 0.0));
  for (int r = 0; r < rings; ++r) {
    // Rings clustered toward the poles so the caps stay well shaped.
    const double s = (r + 1.0) / (rings + 1.0);
    const double y = y_bottom + (y_top - y_bottom) * (0.5 - 0.5 * std::cos(kPi * s));
    const Section sec = detail::interpolate_section(keys, y);
    for (int k = 0; k < segments; ++k) {
      const double phi = 2.0 * kPi * k / segments;
      const double x = sec.a * detail::superellipse_coord(std::cos(phi), sec.n);
      const double z = sec.zc + sec.b * detail::superellipse_coord(std::sin(phi), sec.n);
      verts.push_back(Vec3(x, y, z));
    }
  }
  verts.push_back(Vec3(0.0, y_top, 0.005));
  const auto bottom = 0u;
  const auto top = static_cast<std::uint32_t>(verts.size() - 1);
  auto ring_vertex = [segments](int r, int k) {
    return static_cast<std::uint32_t>(1 + r * segments + ((k % segments) + segments) % segments);
  };
  for (int k = 0; k < segments; ++k) faces.push_back({bottom, ring_vertex(0, k), ring_vertex(0, k + 1)});
  for (int r = 0; r + 1 < rings; ++r) {
    for (int k = 0; k < segments; ++k) {
      const auto a = ring_vertex(r, k);
      const auto b = ring_vertex(r, k + 1);
      const auto c = ring_vertex(r + 1, k + 1);
      const auto d = ring_vertex(r + 1, k);
      faces.push_back({a, d, c});
      faces.push_back({a, c, b});
    }
  }
  for (int k = 0; k < segments; ++k) faces.push_back({top, ring_vertex(rings - 1, k + 1), ring_vertex(rings - 1, k)});

  rig.joints = {
      {joint_names::kPelvis, Vec3(0.0, -0.55, 0.0), -1},
      {joint_names::kSpine, Vec3(0.0, -0.12, 0.0), 0},
      {joint_names::kNeck, Vec3(0.0, 0.0, 0.0), 1},
      {joint_names::kHead, Vec3(0.0, 0.12, 0.0), 2},
      {joint_names::kLeftShoulder, Vec3(0.17 * ss, -0.05, 0.0), 1},
      {joint_names::kRightShoulder, Vec3(-0.17 * ss, -0.05, 0.0), 1},
  };

  rig.weights.resize(verts.size());
  for (std::size_t v = 0; v < verts.size(); ++v) {
    const Vec3& p = verts[v];
    // The neck twist is spread over the neck column; wide shoulder rings below the jaw stay on the torso.
    const double radial = std::hypot(p.x(), p.z());
    const double shoulder_ring = detail::smoothstep(0.07, 0.10, radial) * (1.0 - detail::smoothstep(0.10, 0.14, p.y()));
    const double neckness = detail::smoothstep(0.0, 0.10, p.y()) * (1.0 - shoulder_ring);
    const double headness = detail::smoothstep(0.10, 0.17, p.y());
    const double torso = 1.0 - neckness;
    const double lateral = detail::smoothstep(0.10, 0.17, std::abs(p.x()));
    const double hips = 1.0 - detail::smoothstep(-0.50, -0.35, p.y());
    const double w_shoulder = torso * lateral * (1.0 - hips);
    const double w_pelvis = torso * hips;
    const double w_spine = torso * (1.0 - lateral) * (1.0 - hips);
    const double w_neck = neckness * (1.0 - headness);
    const double w_head = neckness * headness;
    auto& list = rig.weights[v];
    auto add = [&list](std::uint32_t j, double w) {
      if (w > 0.0) list.push_back({j, w});
    };
    add(0, w_pelvis);
    add(1, w_spine);
    add(2, w_neck);
    add(3, w_head);
    add(p.x() >= 0.0 ? 4u : 5u, w_shoulder);
  }
  return rig;
}

/// Copy of `rig` with every vertex bound rigidly to a single joint.
inline RiggedTemplate rebind_to_single_joint(const RiggedTemplate& rig, const std::string& joint) {
  RiggedTemplate out = rig;
  const auto j = static_cast<std::uint32_t>(rig.joint_index(joint));
  for (auto& list : out.weights) list = {{j, 1.0}};
  return out;
}

}  // namespace hsf

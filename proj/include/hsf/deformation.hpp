// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Observation-to-canonical deformation fields guided by a posed body mesh.
//
// Two fields are provided:
//  * baseline: the closest point x^ on the posed mesh is carried to the canonical mesh by
//    barycentric transfer, and its displacement is attenuated by exp(-|x - x^|^2).
//  * local_frame: x is expressed in the orthonormal frame of its nearest posed face and
//    re-emitted from the frame of the same face on the canonical mesh. Points whose
//    distance to that face is >= alpha are left in place.
#pragma once

#include "hsf/body_model.hpp"
#include "hsf/bvh.hpp"
#include "hsf/parallel.hpp"

#include <cmath>
#include <optional>
#include <span>

namespace hsf {

enum class DeformMode { baseline_eq10, local_frame_eq11 };

inline const char* to_string(DeformMode m) { return m == DeformMode::baseline_eq10 ? "eq10" : "eq11"; }

inline DeformMode parse_deform_mode(const std::string& s) {
  if (s == "eq10" || s == "baseline") return DeformMode::baseline_eq10;
  if (s == "eq11" || s == "local_frame") return DeformMode::local_frame_eq11;
  throw ValidationError("unknown deformation mode '" + s + "' (expected eq10 or eq11)");
}

struct DeformationConfig {
  /// Shell thickness in scene units for the local-frame field.
  double alpha = 0.25;
  DeformMode mode = DeformMode::local_frame_eq11;
  /// Faces whose bounds miss this box are excluded from all queries.
  std::optional<Eigen::AlignedBox3d> cull_bbox;

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("deformation alpha must be > 0");
  }
};

class DeformationContext {
 public:
  DeformationContext(std::shared_ptr<const RiggedTemplate> rig, const BodyPose& pose, DeformationConfig config)
      : config_(std::move(config)) {
    config_.validate();
    posed_ = pose_mesh(std::move(rig), pose);
    const TriangleMesh& canon = posed_.canonical->mesh;

    std::vector<std::uint32_t> kept;
    kept.reserve(canon.num_faces());
    for (std::uint32_t f = 0; f < posed_.mesh.num_faces(); ++f) {
      if (config_.cull_bbox) {
        const auto t = posed_.mesh.triangle(f);
        Eigen::AlignedBox3d fb(t[0]);
        fb.extend(t[1]).extend(t[2]);
        if (!config_.cull_bbox->intersects(fb)) continue;
      }
      kept.push_back(f);
    }
    if (kept.empty()) throw ValidationError("face culling removed every face");
    bvh_ = FaceBVH(posed_.mesh, kept);

    posed_frames_.resize(posed_.mesh.num_faces());
    canonical_frames_.resize(canon.num_faces());
    for (auto f : kept) {
      posed_frames_[f] = local_frame(posed_.mesh, f);
      canonical_frames_[f] = local_frame(canon, f);
    }
  }

  const PosedMesh& posed() const { return posed_; }
  const TriangleMesh& canonical_mesh() const { return posed_.canonical->mesh; }
  const FaceBVH& bvh() const { return bvh_; }
  const DeformationConfig& config() const { return config_; }
  std::size_t retained_faces() const { return bvh_.num_faces(); }

  /// Baseline displacement (x^_canonical - x^) / exp(|x - x^|^2).
  Vec3 deform_baseline(const Vec3& x) const {
    const ClosestHit hit = *bvh_.closest_face(x);
    const auto t = canonical_mesh().triangle(hit.face_id);
    const Vec3& b = hit.barycentric;
    const Vec3 canonical_point = b[0] * t[0] + b[1] * t[1] + b[2] * t[2];
    return (canonical_point - hit.point) / std::exp(hit.distance * hit.distance);
  }

  /// Local-frame displacement; exactly zero once the nearest face is alpha or farther away.
  Vec3 deform_local_frame(const Vec3& x) const {
    const auto hit = bvh_.closest_face(x, config_.alpha);
    if (!hit || !(hit->distance < config_.alpha)) return Vec3::Zero();
    const Vec3 uvh = posed_frames_[hit->face_id].to_local(x);
    return canonical_frames_[hit->face_id].from_local(uvh) - x;
  }

  Vec3 deform(const Vec3& x) const {
    return config_.mode == DeformMode::baseline_eq10 ? deform_baseline(x) : deform_local_frame(x);
  }

  /// x' = x + dx in canonical space.
  Vec3 warp_point(const Vec3& x) const { return x + deform(x); }

  std::vector<Vec3> warp_points(std::span<const Vec3> xs, int threads = 0) const {
    std::vector<Vec3> out(xs.size());
    parallel_for(
        xs.size(), [&](std::size_t i) { out[i] = warp_point(xs[i]); }, threads);
    return out;
  }

 private:
  DeformationConfig config_;
  PosedMesh posed_;
  FaceBVH bvh_;
  std::vector<LocalFrame> posed_frames_;
  std::vector<LocalFrame> canonical_frames_;
};

inline DeformationContext build_context(std::shared_ptr<const RiggedTemplate> rig, const BodyPose& pose,
                                        DeformationConfig config = {}) {
  return DeformationContext(std::move(rig), pose, std::move(config));
}

inline Vec3 deform_baseline(const DeformationContext& ctx, const Vec3& x) { return ctx.deform_baseline(x); }
inline Vec3 deform_local_frame(const DeformationContext& ctx, const Vec3& x) { return ctx.deform_local_frame(x); }
inline Vec3 warp_point(const DeformationContext& ctx, const Vec3& x) { return ctx.warp_point(x); }

}  // namespace hsf

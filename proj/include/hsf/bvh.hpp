// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Bounding-volume hierarchy over mesh faces for nearest-face queries.
#pragma once

#include "hsf/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <span>

namespace hsf {

namespace detail {

/// (distance, face_id) ordering: nearer wins, equal distances go to the lower face id.
inline bool better_hit(double dist, std::uint32_t face, double best_dist, std::uint32_t best_face) {
  return dist < best_dist || (dist == best_dist && face < best_face);
}

/// Slack on the pruning bound so boxes touching an equidistant face are still visited and the
/// lowest-id tie-break sees every candidate.
inline double prune_bound_sq(double dist) { return dist * dist * (1.0 + 1e-9); }

inline double box_distance_sq(const Eigen::AlignedBox3d& box, const Vec3& q) {
  const Vec3 d = (box.min() - q).cwiseMax(q - box.max()).cwiseMax(0.0);
  return d.squaredNorm();
}

}  // namespace detail

/// Immutable BVH. Median split on the longest centroid axis; leaves hold up to kLeafSize faces.
class FaceBVH {
 public:
  static constexpr std::size_t kLeafSize = 4;

  struct Node {
    Eigen::AlignedBox3d box;
    std::uint32_t first = 0;  // leaf: first slot in tris_; inner: index of left child
    std::uint32_t count = 0;  // leaf: number of faces; inner: 0
    std::uint32_t right = 0;  // inner: index of right child
    bool is_leaf() const { return count > 0; }
  };

  FaceBVH() = default;

  /// BVH over all faces of `mesh`.
  explicit FaceBVH(const TriangleMesh& mesh) {
    std::vector<std::uint32_t> all(mesh.num_faces());
    std::iota(all.begin(), all.end(), 0u);
    build(mesh, all);
  }

  /// BVH over a subset of face ids (ids refer to `mesh`).
  FaceBVH(const TriangleMesh& mesh, std::span<const std::uint32_t> face_ids) { build(mesh, face_ids); }

  std::size_t num_faces() const { return ids_.size(); }
  std::size_t num_nodes() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<std::uint32_t>& face_ids() const { return ids_; }

  /// Nearest face within `max_distance` (inclusive); nullopt when none qualifies.
  std::optional<ClosestHit> closest_face(const Vec3& q,
                                         double max_distance = std::numeric_limits<double>::infinity()) const {
    ClosestHit best;
    double best_dist = max_distance;
    std::uint32_t best_face = std::numeric_limits<std::uint32_t>::max();
    bool found = false;

    std::uint32_t stack[64];
    int top = 0;
    if (detail::box_distance_sq(nodes_[0].box, q) > detail::prune_bound_sq(best_dist)) return std::nullopt;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (detail::box_distance_sq(node.box, q) > detail::prune_bound_sq(best_dist)) continue;
      if (node.is_leaf()) {
        for (std::uint32_t k = node.first; k < node.first + node.count; ++k) {
          const auto& t = tris_[k];
          ClosestHit hit = closest_point_on_triangle(q, t[0], t[1], t[2]);
          hit.face_id = ids_[k];
          const bool admissible = found ? detail::better_hit(hit.distance, hit.face_id, best_dist, best_face)
                                        : hit.distance <= best_dist;
          if (admissible) {
            best = hit;
            best_dist = hit.distance;
            best_face = hit.face_id;
            found = true;
          }
        }
        continue;
      }
      const std::uint32_t l = node.first;
      const std::uint32_t r = node.right;
      const double dl = detail::box_distance_sq(nodes_[l].box, q);
      const double dr = detail::box_distance_sq(nodes_[r].box, q);
      // Push the farther child first so the nearer one is popped next.
      if (dl <= dr) {
        stack[top++] = r;
        stack[top++] = l;
      } else {
        stack[top++] = l;
        stack[top++] = r;
      }
    }
    if (!found) return std::nullopt;
    return best;
  }

 private:
  void build(const TriangleMesh& mesh, std::span<const std::uint32_t> face_ids) {
    if (face_ids.empty()) throw ValidationError("build_bvh: mesh has no faces");
    const std::size_t n = face_ids.size();
    std::vector<std::uint32_t> order(face_ids.begin(), face_ids.end());
    std::vector<Vec3> centroid(mesh.num_faces());
    std::vector<Eigen::AlignedBox3d> fbox(mesh.num_faces());
    for (auto f : order) {
      if (f >= mesh.num_faces()) throw ValidationError("build_bvh: face id out of range");
      const auto t = mesh.triangle(f);
      centroid[f] = (t[0] + t[1] + t[2]) / 3.0;
      fbox[f] = Eigen::AlignedBox3d(t[0]);
      fbox[f].extend(t[1]).extend(t[2]);
    }
    nodes_.reserve(2 * n / kLeafSize + 1);
    nodes_.emplace_back();
    build_node(0, order, 0, n, centroid, fbox, 0);

    ids_ = order;
    tris_.reserve(n);
    for (auto f : ids_) tris_.push_back(mesh.triangle(f));
  }

  void build_node(std::size_t node_index, std::vector<std::uint32_t>& order, std::size_t begin, std::size_t end,
                  const std::vector<Vec3>& centroid, const std::vector<Eigen::AlignedBox3d>& fbox, int depth) {
    Eigen::AlignedBox3d box;
    Eigen::AlignedBox3d cbox;
    for (std::size_t i = begin; i < end; ++i) {
      box.extend(fbox[order[i]]);
      cbox.extend(centroid[order[i]]);
    }
    nodes_[node_index].box = box;
    const std::size_t count = end - begin;
    // Depth cap keeps the fixed traversal stack sufficient even for pathological inputs.
    if (count <= kLeafSize || depth >= 48) {
      nodes_[node_index].first = static_cast<std::uint32_t>(begin);
      nodes_[node_index].count = static_cast<std::uint32_t>(count);
      return;
    }
    int axis = 0;
    cbox.sizes().maxCoeff(&axis);
    const std::size_t mid = begin + count / 2;
    std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double ca = centroid[a][axis];
                       const double cb = centroid[b][axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    const auto left = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    build_node(left, order, begin, mid, centroid, fbox, depth + 1);
    const auto right = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    build_node(right, order, mid, end, centroid, fbox, depth + 1);
    nodes_[node_index].first = left;
    nodes_[node_index].right = right;
    nodes_[node_index].count = 0;
  }

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> ids_;
  std::vector<std::array<Vec3, 3>> tris_;
};

inline FaceBVH build_bvh(const TriangleMesh& mesh) { return FaceBVH(mesh); }

/// Nearest face through the BVH. Ties go to the lowest face id.
inline ClosestHit closest_face(const FaceBVH& bvh, const Vec3& q) { return *bvh.closest_face(q); }

/// Exhaustive scan over the faces of `mesh`; same tie-break as the BVH path.
inline ClosestHit closest_face_exhaustive(const TriangleMesh& mesh, const Vec3& q) {
  if (mesh.num_faces() == 0) throw ValidationError("closest_face_exhaustive: mesh has no faces");
  ClosestHit best;
  best.distance = std::numeric_limits<double>::infinity();
  best.face_id = std::numeric_limits<std::uint32_t>::max();
  for (std::uint32_t f = 0; f < mesh.num_faces(); ++f) {
    ClosestHit hit = closest_point_on_triangle(q, mesh.triangle(f));
    hit.face_id = f;
    if (detail::better_hit(hit.distance, f, best.distance, best.face_id)) best = hit;
  }
  return best;
}

}  // namespace hsf

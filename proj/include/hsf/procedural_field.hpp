// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Procedurally built fields for tests, demos and fixtures.
//
// The portrait field is a smooth visual hull of the stand-in body's front, side and top
// silhouettes. Each tri-grid plane stores a clamped signed-distance value for its own
// silhouette in channel 0, so the three-plane sum approaches 3 only inside all of them. The
// front plane also stores color logits in channels 1..3, split by depth layer into a face
// side and a back-of-head side. A pass-through decoder recovers these sums exactly.
#pragma once

#include "hsf/body_model.hpp"
#include "hsf/trigrid.hpp"

#include <cmath>
#include <vector>

namespace hsf {

/// Sphere with constant color. edge_width == 0 gives a hard step in density; otherwise the
/// density ramps linearly over edge_width and equals inside_density / 2 exactly on the sphere.
struct AnalyticSphereField {
  Vec3 center = Vec3::Zero();
  double radius = 0.5;
  double edge_width = 0.0;
  double inside_density = 200.0;
  Vec3 color = Vec3(0.8, 0.6, 0.4);

  double density(const Vec3& x) const {
    const double d = (x - center).norm();
    if (edge_width <= 0.0) return d < radius ? inside_density : 0.0;
    return inside_density * std::clamp((radius - d) / edge_width + 0.5, 0.0, 1.0);
  }
  FieldSample query(const Vec3& x) const { return {color, density(x)}; }
  double surface_level() const { return 0.5 * inside_density; }
};

namespace detail {

using Polygon2 = std::vector<Eigen::Vector2d>;

/// Signed distance to a simple closed polygon, negative inside.
inline double signed_distance(const Polygon2& poly, const Eigen::Vector2d& p) {
  double best = std::numeric_limits<double>::infinity();
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Eigen::Vector2d& a = poly[j];
    const Eigen::Vector2d& b = poly[i];
    const Eigen::Vector2d ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (a + t * ab - p).norm());
    if ((a.y() > p.y()) != (b.y() > p.y()) && p.x() < a.x() + (p.y() - a.y()) * ab.x() / ab.y()) inside = !inside;
  }
  return inside ? -best : best;
}

struct PortraitSilhouettes {
  Polygon2 front;  // (x, y)
  Polygon2 side;   // (y, z)
  Polygon2 top;    // (x, z)
};

inline PortraitSilhouettes portrait_silhouettes() {
  const auto keys = standin_sections();
  const double y0 = keys.front().y;
  const double y1 = keys.back().y;
  constexpr int kSteps = 240;
  PortraitSilhouettes s;
  std::vector<Section> sections;
  for (int i = 0; i <= kSteps; ++i) sections.push_back(interpolate_section(keys, y0 + (y1 - y0) * i / kSteps));
  for (const auto& sec : sections) s.front.emplace_back(sec.a, sec.y);
  for (auto it = sections.rbegin(); it != sections.rend(); ++it) s.front.emplace_back(-it->a, it->y);
  for (const auto& sec : sections) s.side.emplace_back(sec.y, sec.zc + sec.b);
  for (auto it = sections.rbegin(); it != sections.rend(); ++it) s.side.emplace_back(it->y, it->zc - it->b);
  double a = 0.0, b = 0.0;
  for (const auto& sec : keys) {
    a = std::max(a, sec.a);
    b = std::max(b, sec.b);
  }
  constexpr int kRim = 128;
  for (int k = 0; k < kRim; ++k) {
    const double phi = 2.0 * kPi * k / kRim;
    s.top.emplace_back(a * superellipse_coord(std::cos(phi), 3.0), b * superellipse_coord(std::sin(phi), 3.0));
  }
  return s;
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline Vec3 color_logits(const Vec3& rgb) { return Vec3(logit(rgb.x()), logit(rgb.y()), logit(rgb.z())); }

/// Front-plane albedo at (x, y); front selects the face side.
inline Vec3 portrait_albedo(double x, double y, bool front) {
  const Vec3 skin(0.86, 0.67, 0.53);
  const Vec3 hair(0.24, 0.15, 0.10);
  const Vec3 shirt(0.20, 0.36, 0.62);
  const Vec3 eye(0.08, 0.08, 0.10);
  const Vec3 lips(0.62, 0.22, 0.24);
  if (y < -0.02) return shirt;
  if (y < 0.12) return skin;
  if (!front) return hair;
  if (y > 0.31 || (std::abs(x) > 0.068 && y > 0.2)) return hair;
  const double ex = std::abs(x) - 0.032;
  const double ey = y - 0.235;
  if (ex * ex + ey * ey < 0.013 * 0.013) return eye;
  const double mx = x / 0.026;
  const double my = (y - 0.165) / 0.008;
  if (mx * mx + my * my < 1.0) return lips;
  return skin;
}

}  // namespace detail

struct PortraitFieldOptions {
  int layers = 4;
  int resolution = 96;
  /// Distance over which each silhouette term ramps from 0 to 1.
  double edge_width = 0.04;
  /// Density logit gain on the summed silhouette terms.
  double sharpness = 60.0;
  int hidden_width = 64;
};

/// Decoder that reproduces its 4 input features exactly in its logits: density logit
/// sharpness * (f0 - 2.5), color logits f1..f3.
inline FieldDecoder make_passthrough_decoder(double sharpness, int hidden_width = 64) {
  if (hidden_width < 8) throw ValidationError("pass-through decoder needs at least 8 hidden units");
  FieldDecoder dec = FieldDecoder::zeros(4, {hidden_width});
  auto& hidden = dec.mutable_layers()[0];
  auto& out = dec.mutable_layers()[1];
  // Unit pairs (2c, 2c+1) hold softplus(f_c) and softplus(-f_c); their difference is f_c.
  for (int c = 0; c < 4; ++c) {
    hidden.weights[static_cast<std::size_t>(2 * c) * 4 + c] = 1.0f;
    hidden.weights[static_cast<std::size_t>(2 * c + 1) * 4 + c] = -1.0f;
  }
  for (int c = 1; c < 4; ++c) {
    out.weights[static_cast<std::size_t>(c - 1) * hidden_width + 2 * c] = 1.0f;
    out.weights[static_cast<std::size_t>(c - 1) * hidden_width + 2 * c + 1] = -1.0f;
  }
  const auto gain = static_cast<float>(sharpness);
  out.weights[static_cast<std::size_t>(3) * hidden_width + 0] = gain;
  out.weights[static_cast<std::size_t>(3) * hidden_width + 1] = -gain;
  out.bias[3] = -2.5f * gain;
  dec.validate();
  return dec;
}

inline NeuralField make_portrait_field(const PortraitFieldOptions& options = {}) {
  const auto sil = detail::portrait_silhouettes();
  const int n = options.resolution;
  TriGrid grid(options.layers, n, 4);
  auto coord = [n](int i) { return -1.0 + 2.0 * i / (n - 1); };
  auto term = [&](const detail::Polygon2& poly, double u, double v) {
    return std::clamp(-detail::signed_distance(poly, Eigen::Vector2d(u, v)) / options.edge_width, -2.0, 1.0);
  };
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double u = coord(c);
      const double v = coord(r);
      const auto front = static_cast<float>(term(sil.front, u, v));
      const auto side = static_cast<float>(term(sil.side, u, v));
      const auto top = static_cast<float>(term(sil.top, u, v));
      for (int l = 0; l < options.layers; ++l) {
        grid.at(Plane::xy, l, r, c, 0) = front;
        grid.at(Plane::yz, l, r, c, 0) = side;
        grid.at(Plane::xz, l, r, c, 0) = top;
        const double layer_depth = options.layers == 1 ? 1.0 : -1.0 + 2.0 * l / (options.layers - 1);
        const Vec3 logits = detail::color_logits(detail::portrait_albedo(u, v, layer_depth >= 0.0));
        for (int ch = 0; ch < 3; ++ch) grid.at(Plane::xy, l, r, c, ch + 1) = static_cast<float>(logits[ch]);
      }
    }
  }
  return NeuralField(symmetrize_x(grid), make_passthrough_decoder(options.sharpness, options.hidden_width));
}

}  // namespace hsf

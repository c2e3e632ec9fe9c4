// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Volume rendering of a canonical field seen through a posed body.
//
// Each pixel ray is sampled at stratified depths in [t_near, t_far]. Every sample point is
// warped into canonical space by the deformation field, the field is queried there, and the
// samples are composited front to back:
//   delta_i = t_{i+1} - t_i (the last interval runs to t_far)
//   a_i = 1 - exp(-sigma_i delta_i),  T_i = prod_{j<i} (1 - a_j)
//   raw = sum T_i a_i f_i,  mask = sum T_i a_i
// The raw image is composited over the background as (1 - mask) * bg + raw and then
// upsampled bilinearly.
#pragma once

#include "hsf/camera.hpp"
#include "hsf/deformation.hpp"
#include "hsf/image.hpp"
#include "hsf/parallel.hpp"
#include "hsf/trigrid.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace hsf {

struct RaySample {
  double t = 0.0;
  FieldSample sample;
};

struct QuadratureResult {
  Vec3 color = Vec3::Zero();
  double mask = 0.0;
};

/// Front-to-back compositing of samples ordered by depth; the last sample covers up to t_end.
inline QuadratureResult quadrature(std::span<const RaySample> samples, double t_end) {
  QuadratureResult r;
  double transmittance = 1.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double t_next = i + 1 < samples.size() ? samples[i + 1].t : t_end;
    const double delta = t_next - samples[i].t;
    if (!(delta >= 0.0)) throw ValidationError("ray sample depths must be non-decreasing and end before t_far");
    const double sigma = samples[i].sample.density;
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw NumericError("density must be finite and non-negative");
    const double alpha = 1.0 - std::exp(-sigma * delta);
    const double w = transmittance * alpha;
    r.color += w * samples[i].sample.color;
    r.mask += w;
    transmittance *= 1.0 - alpha;
  }
  return r;
}

/// (1 - mask) * bg + raw, elementwise.
inline Image composite(const Image& raw, const Image& mask, const Image& bg) {
  if (raw.channels != 3 || bg.channels != 3 || mask.channels != 1 || !raw.same_shape(bg) || raw.width != mask.width ||
      raw.height != mask.height) {
    throw ValidationError("composite needs matching RGB raw/background and a one-channel mask");
  }
  Image out(raw.width, raw.height, 3);
  for (std::size_t p = 0; p < raw.pixel_count(); ++p) {
    const double m = mask.data[p];
    for (int c = 0; c < 3; ++c) out.data[p * 3 + c] = (1.0 - m) * bg.data[p * 3 + c] + raw.data[p * 3 + c];
  }
  return out;
}

/// Bilinear stand-in for the super-resolution stage.
inline Image upsample(const Image& img, int factor) {
  if (factor < 1) throw ValidationError("upsample factor must be >= 1");
  if (factor == 1) return img;
  return resize_bilinear(img, img.width * factor, img.height * factor);
}

struct RenderConfig {
  int samples_per_ray = 48;
  /// Extra samples drawn from the coarse weights; 0 disables the second pass.
  int importance_samples = 0;
  double t_near = 2.25;
  double t_far = 3.3;
  int resolution = 64;
  int upsample_factor = 4;
  Vec3 background_color = Vec3(1.0, 1.0, 1.0);
  std::shared_ptr<const Image> background_image;
  /// When set, stratified depths are jittered with a per-pixel stream derived from this seed.
  std::optional<std::uint64_t> jitter_seed;
  DeformationConfig deformation;
  CameraConfig camera;
  int threads = 0;

  void validate() const {
    if (!(t_near < t_far) || !(t_near >= 0.0) || !std::isfinite(t_far)) throw ValidationError("need 0 <= t_near < t_far");
    if (samples_per_ray < 2) throw ValidationError("samples_per_ray must be >= 2");
    if (importance_samples < 0) throw ValidationError("importance_samples must be >= 0");
    if (resolution < 8 || resolution > 1024 || resolution % 4 != 0) {
      throw ValidationError("resolution must be a multiple of 4 in [8, 1024]");
    }
    if (upsample_factor < 1 || upsample_factor > 16) throw ValidationError("upsample_factor must be in [1, 16]");
    if (!background_color.allFinite()) throw ValidationError("background color must be finite");
    deformation.validate();
  }
};

struct RenderOutput {
  Image raw;        // premultiplied field color
  Image mask;       // accumulated opacity, one channel
  Image composed;   // raw over background
  Image upsampled;  // bilinear upsampling of composed
};

/// Anything with `FieldSample query(const Vec3&) const` can be rendered.
template <typename F>
concept QueryableField = requires(const F& f, const Vec3& x) {
  { f.query(x) } -> std::convertible_to<FieldSample>;
};

namespace detail {

inline std::vector<double> stratified_depths(const RenderConfig& cfg, std::size_t pixel) {
  const int n = cfg.samples_per_ray;
  const double h = (cfg.t_far - cfg.t_near) / n;
  std::vector<double> t(n);
  if (cfg.jitter_seed) {
    std::mt19937_64 rng(*cfg.jitter_seed ^ (0x9E3779B97F4A7C15ull * (pixel + 1)));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < n; ++i) t[i] = cfg.t_near + (i + u(rng)) * h;
  } else {
    for (int i = 0; i < n; ++i) t[i] = cfg.t_near + (i + 0.5) * h;
  }
  return t;
}

/// Inverse-CDF draws over the coarse strata, weighted by the coarse compositing weights.
inline std::vector<double> importance_depths(const RenderConfig& cfg, std::span<const RaySample> coarse) {
  const int n = static_cast<int>(coarse.size());
  const double h = (cfg.t_far - cfg.t_near) / n;
  std::vector<double> cdf(n + 1, 0.0);
  double transmittance = 1.0;
  for (int i = 0; i < n; ++i) {
    const double t_next = i + 1 < n ? coarse[i + 1].t : cfg.t_far;
    const double alpha = 1.0 - std::exp(-coarse[i].sample.density * (t_next - coarse[i].t));
    cdf[i + 1] = cdf[i] + transmittance * alpha + 1e-5;
    transmittance *= 1.0 - alpha;
  }
  std::vector<double> out(cfg.importance_samples);
  int bin = 0;
  for (int k = 0; k < cfg.importance_samples; ++k) {
    const double target = (k + 0.5) / cfg.importance_samples * cdf[n];
    while (bin + 1 < n && cdf[bin + 1] < target) ++bin;
    const double span = cdf[bin + 1] - cdf[bin];
    const double frac = span > 0.0 ? (target - cdf[bin]) / span : 0.5;
    out[k] = cfg.t_near + (bin + std::clamp(frac, 0.0, 1.0)) * h;
  }
  return out;
}

template <QueryableField Field>
class RenderJob {
 public:
  RenderJob(const Field& field, const DeformationContext* deform, const RenderConfig& cfg)
      : field_(field), deform_(deform), cfg_(cfg) {}

  RaySample evaluate(const Ray& ray, double t) const {
    const Vec3 x = ray.at(t);
    const Vec3 xc = deform_ ? deform_->warp_point(x) : x;
    return {t, field_.query(xc)};
  }

  QuadratureResult shade(const Ray& ray, std::size_t pixel) const {
    std::vector<RaySample> samples;
    for (double t : stratified_depths(cfg_, pixel)) samples.push_back(evaluate(ray, t));
    if (cfg_.importance_samples > 0) {
      const auto extra = importance_depths(cfg_, samples);
      std::vector<RaySample> fine;
      for (double t : extra) fine.push_back(evaluate(ray, t));
      std::vector<RaySample> merged(samples.size() + fine.size());
      std::merge(samples.begin(), samples.end(), fine.begin(), fine.end(), merged.begin(),
                 [](const RaySample& a, const RaySample& b) { return a.t < b.t; });
      samples = std::move(merged);
    }
    return quadrature(samples, cfg_.t_far);
  }

  RenderOutput run(const CameraParams& camera) const {
    const int n = cfg_.resolution;
    RenderOutput out;
    out.raw = Image(n, n, 3);
    out.mask = Image(n, n, 1);
    parallel_for(
        static_cast<std::size_t>(n) * n,
        [&](std::size_t p) {
          const int row = static_cast<int>(p / n);
          const int col = static_cast<int>(p % n);
          const QuadratureResult q = shade(pixel_ray(camera, col, row, n, n), p);
          for (int c = 0; c < 3; ++c) out.raw.data[p * 3 + c] = q.color[c];
          out.mask.data[p] = q.mask;
        },
        cfg_.threads);
    Image bg;
    if (cfg_.background_image && !cfg_.background_image->empty()) {
      const Image& src = *cfg_.background_image;
      bg = (src.width == n && src.height == n && src.channels == 3) ? src : resize_bilinear(src, n, n);
      if (bg.channels != 3) throw ValidationError("background image must be RGB");
    } else {
      bg = Image::filled(n, n, cfg_.background_color);
    }
    out.composed = composite(out.raw, out.mask, bg);
    out.upsampled = upsample(out.composed, cfg_.upsample_factor);
    return out;
  }

 private:
  const Field& field_;
  const DeformationContext* deform_;
  const RenderConfig& cfg_;
};

}  // namespace detail

/// Renders field through the body posed by pose. rig may be null to render the canonical
/// field without deformation.
template <QueryableField Field>
RenderOutput render(const Field& field, std::shared_ptr<const RiggedTemplate> rig, const BodyPose& pose,
                    const CameraParams& camera, const RenderConfig& cfg) {
  cfg.validate();
  camera.validate(cfg.camera);
  std::optional<DeformationContext> ctx;
  if (rig) ctx.emplace(std::move(rig), pose, cfg.deformation);
  return detail::RenderJob<Field>(field, ctx ? &*ctx : nullptr, cfg).run(camera);
}

inline RenderOutput render(const TriGrid& grid, const FieldDecoder& decoder, std::shared_ptr<const RiggedTemplate> rig,
                           const BodyPose& pose, const CameraParams& camera, const RenderConfig& cfg) {
  return render(NeuralField(grid, decoder), std::move(rig), pose, camera, cfg);
}

/// Yaw of turntable frame k of n: starts frontal and sweeps the full circle.
inline double turntable_mu(int k, int n_frames) { return wrap_angle(kPi / 2 + 2.0 * kPi * k / n_frames); }

/// Renders n_frames cameras at fixed pitch nu with mu = pi/2 + 2 pi k / n_frames.
template <QueryableField Field>
std::vector<RenderOutput> render_turntable(const Field& field, std::shared_ptr<const RiggedTemplate> rig,
                                           const BodyPose& pose, double nu, int n_frames, const RenderConfig& cfg) {
  if (n_frames < 1) throw ValidationError("turntable needs at least one frame");
  cfg.validate();
  std::optional<DeformationContext> ctx;
  if (rig) ctx.emplace(std::move(rig), pose, cfg.deformation);
  const detail::RenderJob<Field> job(field, ctx ? &*ctx : nullptr, cfg);
  std::vector<RenderOutput> frames;
  frames.reserve(n_frames);
  for (int k = 0; k < n_frames; ++k) {
    frames.push_back(job.run(camera_from_spherical(turntable_mu(k, n_frames), nu, cfg.camera)));
  }
  return frames;
}

}  // namespace hsf

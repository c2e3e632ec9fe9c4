// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Pose losses and training-schedule curves as pure functions of the number of images seen.
//
//   lambda_preg:       0.5 up to 0.2M, linear to 0 at 0.4M, then 0
//   swap_probability:  1.0 at 0, linear to 0.7 at 1M, then 0.7
//   neural_resolution: 64 below 10M, linear 64 -> 128 over [10M, 11M] rounded to a multiple of 4
//   stage:             1 on [0, 6M) with the pose predictor training, 2 on [6M, 10M) and
//                      3 on [10M, 13M] with it frozen
#pragma once

#include "hsf/body_model.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace hsf {

inline constexpr std::int64_t kMillion = 1'000'000;
inline constexpr std::int64_t kTrainingLength = 13 * kMillion;

struct TrainingClock {
  std::int64_t images_seen = 0;

  static TrainingClock millions(double m) { return {static_cast<std::int64_t>(std::llround(m * kMillion))}; }
  double in_millions() const { return static_cast<double>(images_seen) / kMillion; }
};

namespace detail {

inline void check_clock(const TrainingClock& c) {
  if (c.images_seen < 0) throw ValidationError("training clock must be non-negative");
}

/// Linear ramp from v0 at i0 to v1 at i1, held constant outside.
inline double ramp(std::int64_t i, std::int64_t i0, std::int64_t i1, double v0, double v1) {
  if (i <= i0) return v0;
  if (i >= i1) return v1;
  return v0 + (v1 - v0) * static_cast<double>(i - i0) / static_cast<double>(i1 - i0);
}

}  // namespace detail

enum class LossNorm { squared, euclidean };

/// Distance between the six neck/head components; squared by default.
inline double pose_distance(const BodyPose& a, const BodyPose& b, LossNorm norm = LossNorm::squared) {
  const double sq = (a.neck - b.neck).squaredNorm() + (a.head - b.head).squaredNorm();
  return norm == LossNorm::squared ? sq : std::sqrt(sq);
}

/// Pose prediction loss between the sampled pose and the pose predicted from the image.
inline double pose_loss(const BodyPose& p_gen, const BodyPose& p_hat, LossNorm norm = LossNorm::squared) {
  return pose_distance(p_gen, p_hat, norm);
}

/// Regularizer pulling the predicted pose toward the coarse dataset pose.
inline double pose_reg_loss(const BodyPose& p_gen, const BodyPose& p_coarse, LossNorm norm = LossNorm::squared) {
  return pose_distance(p_gen, p_coarse, norm);
}

inline double lambda_preg(const TrainingClock& c) {
  detail::check_clock(c);
  return detail::ramp(c.images_seen, 2 * kMillion / 10, 4 * kMillion / 10, 0.5, 0.0);
}

inline double swap_probability(const TrainingClock& c) {
  detail::check_clock(c);
  return detail::ramp(c.images_seen, 0, kMillion, 1.0, 0.7);
}

inline int neural_resolution(const TrainingClock& c) {
  detail::check_clock(c);
  const double r = detail::ramp(c.images_seen, 10 * kMillion, 11 * kMillion, 64.0, 128.0);
  return 4 * static_cast<int>(std::floor(r / 4.0 + 0.5));
}

struct StageInfo {
  int stage = 1;
  /// Pose regularizer weighted at all (lambda_preg > 0).
  bool preg_active = false;
  /// Pose regularizer at its full weight, the checked rows of the stage table.
  bool preg_full_weight = false;
  bool gamma_g_frozen = false;
  /// Set when the clock runs past the end of the schedule.
  std::string warning;
};

inline StageInfo stage_of(const TrainingClock& c) {
  detail::check_clock(c);
  StageInfo s;
  const auto i = c.images_seen;
  s.stage = i < 6 * kMillion ? 1 : (i < 10 * kMillion ? 2 : 3);
  s.gamma_g_frozen = s.stage > 1;
  s.preg_active = i < 4 * kMillion / 10;
  s.preg_full_weight = i <= 2 * kMillion / 10;
  if (i > kTrainingLength) s.warning = "clock is past the 13M-image schedule; reporting stage 3";
  return s;
}

struct ScheduleRow {
  TrainingClock clock;
  StageInfo stage;
  double lambda_preg = 0.0;
  double swap_probability = 0.0;
  int neural_resolution = 0;
};

inline ScheduleRow schedule_at(const TrainingClock& c) {
  return {c, stage_of(c), lambda_preg(c), swap_probability(c), neural_resolution(c)};
}

/// Clock values at every breakpoint of the schedule plus the ramp midpoints.
inline std::vector<TrainingClock> schedule_breakpoints() {
  std::vector<TrainingClock> out;
  for (double m : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 1.0, 2.0, 5.0, 6.0, 8.0, 9.0, 10.0, 10.25, 10.5, 10.75, 11.0, 12.0, 13.0}) {
    out.push_back(TrainingClock::millions(m));
  }
  return out;
}

}  // namespace hsf

#pragma once

#include "objdis/geometry.hpp"
#include "objdis/random.hpp"

namespace objdis {

inline constexpr double kMoveStep = 0.2;             // meters per MoveAhead
inline constexpr double kRotateStep = kPi / 4.0;     // radians per Rotate*

/// Locobot-style actuation noise. Every term scales linearly with `multiplier`;
/// at multiplier 1 the translation error std equals the 0.2 m step.
struct MotionNoiseSpec {
  double multiplier = 0.0;
  double trans_sigma_at_1 = 0.2;
  double rot_sigma_at_1 = deg_to_rad(45.0) * 0.25;
  double drift_sigma_at_1 = 0.05;
  double trans_bias = 0.0;
  double rot_bias = 0.0;
  double drift_bias = 0.0;

  static MotionNoiseSpec zero() {
    MotionNoiseSpec s;
    s.trans_sigma_at_1 = s.rot_sigma_at_1 = s.drift_sigma_at_1 = 0.0;
    return s;
  }
};

/// A body motion in the agent frame: forward translation, lateral drift
/// (positive to the right) and yaw change.
struct BodyMotion {
  double translate = 0.0;
  double rotate = 0.0;
  double lateral = 0.0;

  friend bool operator==(const BodyMotion&, const BodyMotion&) = default;
};

inline BodyMotion perturb_motion(const BodyMotion& commanded, const MotionNoiseSpec& spec, Rng& rng) {
  BodyMotion actual = commanded;
  const double m = spec.multiplier;
  if (commanded.translate != 0.0) {
    actual.translate += m * (spec.trans_bias + gaussian(rng, spec.trans_sigma_at_1));
    actual.lateral += m * (spec.drift_bias + gaussian(rng, spec.drift_sigma_at_1));
  } else if (commanded.rotate != 0.0) {
    actual.rotate += m * (spec.rot_bias + gaussian(rng, spec.rot_sigma_at_1));
  }
  return actual;
}

/// Pose after executing `motion` from `pose`: translate along the current
/// heading (plus lateral drift), then turn.
inline Pose apply_motion(const Pose& pose, const BodyMotion& motion) {
  const Point3 step = rotate_yaw({motion.lateral, 0.0, motion.translate}, pose.yaw);
  return Pose::make(pose.x + step.x, pose.z + step.z, pose.y, pose.yaw + motion.rotate);
}

/// Dead-reckoned pose relative to the episode start (L^r_t).
struct DeadReckonState {
  Pose pose_estimate;
  int step_count = 0;
};

/// Integrates the commanded motion of an action that the environment reported
/// as successful. Failed actions leave the estimate unchanged.
inline DeadReckonState dead_reckon(const DeadReckonState& state, const BodyMotion& commanded,
                                   bool succeeded = true) {
  DeadReckonState next = state;
  ++next.step_count;
  if (succeeded) next.pose_estimate = apply_motion(state.pose_estimate, commanded);
  return next;
}

}  // namespace objdis

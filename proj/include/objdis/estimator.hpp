#pragma once

#include <optional>

#include "objdis/frames.hpp"
#include "objdis/geometry.hpp"

namespace objdis {

enum class EstimateStatus { Unobserved, Tracking };

/// How fresh measurements are blended into an existing estimate.
enum class BlendMode {
  Exponential,  // position <- (1 - alpha) * position + alpha * fresh
  RunningMean,  // alpha = 1 / observation_count
};

/// Relative 3D location of one target in the agent's current frame.
struct TargetEstimate {
  EstimateStatus status = EstimateStatus::Unobserved;
  Point3 position;  // meaningful only while tracking
  int observation_count = 0;
  int steps_since_seen = 0;
  double alpha = 0.5;
  BlendMode mode = BlendMode::Exponential;
  int unobserved_propagations = 0;  // diagnostic: propagate() calls that had nothing to move

  bool tracking() const { return status == EstimateStatus::Tracking; }

  static TargetEstimate make(double alpha = 0.5, BlendMode mode = BlendMode::Exponential) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidInput("alpha must lie in (0, 1]");
    TargetEstimate e;
    e.alpha = alpha;
    e.mode = mode;
    return e;
  }
};

/// Re-express a tracked position after the agent moved by `ego_motion`
/// (the new agent pose expressed in the old agent frame).
inline Point3 propagate_point(const Point3& p, const Pose& ego_motion) {
  return transform_point(invert(ego_motion), p);
}

inline TargetEstimate propagate(const TargetEstimate& est, const Pose& ego_motion) {
  TargetEstimate out = est;
  if (!est.tracking()) {
    ++out.unobserved_propagations;
    return out;
  }
  out.position = propagate_point(est.position, ego_motion);
  ++out.steps_since_seen;
  return out;
}

/// Folds an agent-frame measurement into the estimate.
inline TargetEstimate fuse_measurement(const TargetEstimate& est, const Point3& measurement) {
  TargetEstimate out = est;
  if (!est.tracking()) {
    out.status = EstimateStatus::Tracking;
    out.position = measurement;
  } else {
    const double w = est.mode == BlendMode::RunningMean ? 1.0 / (est.observation_count + 1) : est.alpha;
    out.position = est.position * (1.0 - w) + measurement * w;
  }
  ++out.observation_count;
  out.steps_since_seen = 0;
  return out;
}

/// Masked-depth observation of the target. An empty mask (or no valid depth
/// under it) is not an error: the estimate only ages.
inline TargetEstimate observe(const TargetEstimate& est, const Mask& mask, const DepthFrame& depth,
                              const CameraModel& cam, const Pose& camera_to_agent) {
  if (mask.width != cam.width || mask.height != cam.height || depth.width != cam.width ||
      depth.height != cam.height)
    throw InvalidInput("mask/depth/camera resolution mismatch");
  const auto centroid = backproject_masked_centroid(depth, mask, cam);
  if (!centroid) {
    TargetEstimate out = est;
    ++out.steps_since_seen;
    return out;
  }
  return fuse_measurement(est, camera_to_agent_point(camera_to_agent, *centroid));
}

struct SensorBundle {
  const Mask& mask;
  const DepthFrame& depth;
  const CameraModel& cam;
  Pose camera_to_agent;
  Pose ego_motion;  // dead-reckoned motion since the previous tick
};

/// Per-tick update: carry the estimate through the ego-motion, then observe.
/// Staleness advances by exactly one per tick without a detection.
inline TargetEstimate estimate_step(const TargetEstimate& est, const SensorBundle& in) {
  TargetEstimate moved = est;
  if (est.tracking()) moved.position = propagate_point(est.position, in.ego_motion);
  return observe(moved, in.mask, in.depth, in.cam, in.camera_to_agent);
}

}  // namespace objdis

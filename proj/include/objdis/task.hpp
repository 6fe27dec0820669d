#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "objdis/error.hpp"
#include "objdis/estimator.hpp"
#include "objdis/frames.hpp"
#include "objdis/geometry.hpp"
#include "objdis/odometry.hpp"
#include "objdis/random.hpp"
#include "objdis/scene.hpp"
#include "objdis/sensors.hpp"

namespace objdis {

// ---------------------------------------------------------------------------
// Actions
// ---------------------------------------------------------------------------

enum class Action : std::uint8_t {
  MoveAhead,
  RotateRight,
  RotateLeft,
  ArmBaseUp,
  ArmBaseDown,
  GripperPlusX,
  GripperMinusX,
  GripperPlusY,
  GripperMinusY,
  GripperPlusZ,
  GripperMinusZ,
};

inline constexpr int kNumActions = 11;

inline constexpr std::array<std::string_view, kNumActions> kActionNames = {
    "MoveAhead",    "RotateRight",   "RotateLeft",   "ArmBaseUp",
    "ArmBaseDown",  "GripperPlusX",  "GripperMinusX", "GripperPlusY",
    "GripperMinusY", "GripperPlusZ", "GripperMinusZ"};

inline std::string_view action_name(Action a) { return kActionNames[static_cast<std::size_t>(a)]; }

inline std::optional<Action> parse_action(std::string_view s) {
  for (int i = 0; i < kNumActions; ++i)
    if (kActionNames[i] == s) return static_cast<Action>(i);
  return std::nullopt;
}

inline bool is_body_action(Action a) {
  return a == Action::MoveAhead || a == Action::RotateRight || a == Action::RotateLeft;
}

inline BodyMotion commanded_motion(Action a) {
  switch (a) {
    case Action::MoveAhead: return {kMoveStep, 0.0, 0.0};
    case Action::RotateRight: return {0.0, kRotateStep, 0.0};
    case Action::RotateLeft: return {0.0, -kRotateStep, 0.0};
    default: return {};
  }
}

// ---------------------------------------------------------------------------
// Arm
// ---------------------------------------------------------------------------

struct ArmLimits {
  double base_min = 0.4;
  double base_max = 1.2;
  Point3 workspace_min{-0.4, -0.5, 0.0};
  Point3 workspace_max{0.4, 0.5, 0.7};
  double step = 0.05;
  double gripper_half = 0.02;  // half-extent of the gripper collision cube
  double touch_tolerance = 0.03;
};

struct ArmState {
  double base_height = 0.8;
  Point3 gripper_offset{0.0, 0.0, 0.1};  // relative to the arm base, agent axes
  std::optional<int> holding;
  Point3 attach_offset;  // held object center minus gripper, agent axes

  Point3 gripper_agent() const { return {gripper_offset.x, base_height + gripper_offset.y, gripper_offset.z}; }
  Point3 held_center_agent() const { return gripper_agent() + attach_offset; }

  friend bool operator==(const ArmState&, const ArmState&) = default;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct EnvConfig {
  CameraModel camera = CameraModel::default_camera();
  Pose camera_mount = Pose::make(0.0, 0.0, 1.0, 0.0);  // camera in the agent frame
  BodySpec body;
  ArmLimits arm;
  int max_steps = 200;
  double success_distance = 0.20;
  double disturb_threshold = 0.01;
  double visit_cell = 0.2;
  double estimator_alpha = 0.5;
  BlendMode estimator_mode = BlendMode::Exponential;
};

struct NoiseSpecs {
  MotionNoiseSpec motion = MotionNoiseSpec{};
  DepthNoiseSpec depth;
  DegradationSpec source_mask;
  DegradationSpec dest_mask;
};

/// Independent random streams so that, e.g., changing mask degradation never
/// perturbs the motion-noise draws of the same episode.
struct EpisodeRng {
  Rng motion;
  Rng depth;
  Rng source_mask;
  Rng dest_mask;

  static EpisodeRng from_seed(std::uint64_t seed) {
    return {Rng(derive_seed(seed, "motion")), Rng(derive_seed(seed, "depth")),
            Rng(derive_seed(seed, "source_mask")), Rng(derive_seed(seed, "dest_mask"))};
  }
};

// ---------------------------------------------------------------------------
// Episode state
// ---------------------------------------------------------------------------

enum class EpisodeStatus { Running, Success, Timeout };

inline std::string_view status_name(EpisodeStatus s) {
  switch (s) {
    case EpisodeStatus::Running: return "running";
    case EpisodeStatus::Success: return "success";
    case EpisodeStatus::Timeout: return "timeout";
  }
  return "?";
}

struct EpisodeState {
  EnvConfig config;
  Scene scene;
  int source_id = -1;
  int dest_id = -1;
  Pose start_pose;
  Pose true_pose;
  ArmState arm;
  DeadReckonState dead_reckoning;
  TargetEstimate source_est;
  TargetEstimate dest_est;
  int step = 0;
  bool disturbed = false;
  bool picked_up = false;
  EpisodeStatus done = EpisodeStatus::Running;
  bool source_seen = false;
  bool dest_seen = false;
  std::set<std::tuple<int, int, int>> visited;
  std::map<int, Point3> initial_centers;

  const SceneObject& source() const { return *scene.find(source_id); }
  const SceneObject& dest() const { return *scene.find(dest_id); }

  Pose camera_world() const { return compose(true_pose, config.camera_mount); }
  Point3 gripper_world() const { return transform_point(true_pose, arm.gripper_agent()); }
  /// Ground-truth position of a world point in the current agent frame.
  Point3 to_agent(const Point3& world) const { return transform_point(invert(true_pose), world); }
};

/// What a policy is allowed to see after each step.
struct Observation {
  DepthFrame depth;  // after depth noise
  Mask source_mask;  // after degradation
  Mask dest_mask;
  bool last_action_success = true;
  ArmState arm;            // proprioception
  Pose dead_reckoned;      // L^r_t
  Pose ego_motion;         // dead-reckoned motion over the last step
};

struct StepEvents {
  Action action = Action::MoveAhead;
  bool action_failed = false;
  bool picked_up_now = false;
  bool success = false;
  bool timeout = false;
  bool disturbed_now = false;
  bool new_state = false;
  bool source_first_seen = false;
  bool dest_first_seen = false;
  bool source_visible = false;  // ground-truth mask non-empty
  bool dest_visible = false;
  double arm_distance_before = 0.0;
  double arm_distance_after = 0.0;
  std::vector<int> pushed;
};

// ---------------------------------------------------------------------------
// Rewards
// ---------------------------------------------------------------------------

namespace reward {
inline constexpr double kStep = -0.01;
inline constexpr double kFailedAction = -0.03;
inline constexpr double kSuccess = 10.0;
inline constexpr double kObjectObserved = 1.0;
inline constexpr double kVisitNewState = 0.1;
inline constexpr double kPickup = 5.0;
}  // namespace reward

struct RewardInputs {
  bool action_failed = false;
  bool success = false;
  int targets_first_observed = 0;
  bool new_state = false;
  bool picked_up_now = false;
  double arm_distance_before = 0.0;
  double arm_distance_after = 0.0;
};

struct RewardLedger {
  double step = 0.0;
  double failed_action = 0.0;
  double success = 0.0;
  double object_observed = 0.0;
  double visit_new_state = 0.0;
  double pickup = 0.0;
  double arm_distance = 0.0;  // -delta, delta = new distance - old distance
  double total = 0.0;
};

inline RewardLedger compute_reward(const RewardInputs& in) {
  RewardLedger r;
  r.step = reward::kStep;
  r.failed_action = in.action_failed ? reward::kFailedAction : 0.0;
  r.success = in.success ? reward::kSuccess : 0.0;
  r.object_observed = reward::kObjectObserved * in.targets_first_observed;
  r.visit_new_state = in.new_state ? reward::kVisitNewState : 0.0;
  r.pickup = in.picked_up_now ? reward::kPickup : 0.0;
  r.arm_distance = -(in.arm_distance_after - in.arm_distance_before);
  r.total = r.step + r.failed_action + r.success + r.object_observed + r.visit_new_state + r.pickup +
            r.arm_distance;
  return r;
}

inline RewardInputs reward_inputs(const StepEvents& ev) {
  return {ev.action_failed,
          ev.success,
          static_cast<int>(ev.source_first_seen) + static_cast<int>(ev.dest_first_seen),
          ev.new_state,
          ev.picked_up_now,
          ev.arm_distance_before,
          ev.arm_distance_after};
}

// ---------------------------------------------------------------------------
// Dynamics helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::tuple<int, int, int> visit_key(const Pose& p, double cell) {
  const int yaw_bin = static_cast<int>(std::lround(p.yaw / kRotateStep)) & 7;
  return {static_cast<int>(std::lround(p.x / cell)), static_cast<int>(std::lround(p.z / cell)), yaw_bin};
}

inline Box gripper_box(const EpisodeState& s, const Pose& pose, const ArmState& arm) {
  const Point3 g = transform_point(pose, arm.gripper_agent());
  const double h = s.config.arm.gripper_half;
  return Box::from_center(g, {h, h, h});
}

inline std::optional<Box> held_box(const EpisodeState& s, const Pose& pose, const ArmState& arm) {
  if (!arm.holding) return std::nullopt;
  const Point3 c = transform_point(pose, arm.held_center_agent());
  const SceneObject* o = s.scene.find(*arm.holding);
  return Box::from_center(c, o->box.size() * 0.5);
}

/// Collision test for the whole agent (body, gripper, held object) at `pose`.
inline bool agent_collides(const EpisodeState& s, const Pose& pose, const ArmState& arm) {
  if (body_collides(s.scene, pose.x, pose.z, s.config.body, true)) return true;
  const Box g = gripper_box(s, pose, arm);
  if (box_hits_statics(s.scene, g)) return true;
  const auto hb = held_box(s, pose, arm);
  if (hb && box_hits_statics(s.scene, *hb)) return true;
  for (const auto& o : s.scene.objects) {
    if (o.held) continue;
    if (g.intersects(o.box)) return true;
    if (hb && hb->intersects(o.box)) return true;
  }
  return false;
}

inline void sync_held_box(EpisodeState& s) {
  if (auto hb = held_box(s, s.true_pose, s.arm)) s.scene.find(*s.arm.holding)->box = *hb;
}

inline double objective_distance(const EpisodeState& s) {
  const SceneObject& target = s.picked_up ? s.dest() : s.source();
  return distance(s.gripper_world(), target.box.center());
}

/// Body action with sub-stepped sweep collision checks. Returns success.
inline bool execute_body_action(EpisodeState& s, const BodyMotion& actual) {
  const double sweep = std::abs(actual.translate) + std::abs(actual.lateral);
  const int n = std::max({1, static_cast<int>(std::ceil(sweep / 0.05)),
                          static_cast<int>(std::ceil(std::abs(actual.rotate) / (kPi / 16.0)))});
  for (int k = 1; k <= n; ++k) {
    const double f = static_cast<double>(k) / n;
    const Pose p = apply_motion(s.true_pose, {actual.translate * f, actual.rotate * f, actual.lateral * f});
    if (agent_collides(s, p, s.arm)) return false;
  }
  s.true_pose = apply_motion(s.true_pose, actual);
  sync_held_box(s);
  return true;
}

/// Arm action: 5 cm base or gripper motion clamped to the workspace. Moves
/// that clamp to nothing or hit static geometry fail. Movable objects in the
/// way are pushed along, unless that would jam them into something.
inline bool execute_arm_action(EpisodeState& s, Action a, StepEvents& ev) {
  const ArmLimits& lim = s.config.arm;
  ArmState next = s.arm;
  auto move_axis = [&](double Point3::*axis, double delta) {
    double& v = next.gripper_offset.*axis;
    v = std::clamp(v + delta, lim.workspace_min.*axis, lim.workspace_max.*axis);
  };
  switch (a) {
    case Action::ArmBaseUp: next.base_height = std::min(next.base_height + lim.step, lim.base_max); break;
    case Action::ArmBaseDown: next.base_height = std::max(next.base_height - lim.step, lim.base_min); break;
    case Action::GripperPlusX: move_axis(&Point3::x, lim.step); break;
    case Action::GripperMinusX: move_axis(&Point3::x, -lim.step); break;
    case Action::GripperPlusY: move_axis(&Point3::y, lim.step); break;
    case Action::GripperMinusY: move_axis(&Point3::y, -lim.step); break;
    case Action::GripperPlusZ: move_axis(&Point3::z, lim.step); break;
    case Action::GripperMinusZ: move_axis(&Point3::z, -lim.step); break;
    default: return false;
  }
  if (next.gripper_agent() == s.arm.gripper_agent()) return false;

  const Point3 delta = transform_point(s.true_pose, next.gripper_agent()) - s.gripper_world();
  const Box g = gripper_box(s, s.true_pose, next);
  if (box_hits_statics(s.scene, g)) return false;
  const auto hb = held_box(s, s.true_pose, next);
  if (hb && box_hits_statics(s.scene, *hb)) return false;

  std::vector<SceneObject> objects = s.scene.objects;
  std::vector<int> pushed;
  for (auto& o : objects) {
    if (o.held) continue;
    const bool touching_source = o.id == s.source_id && !s.arm.holding;
    const bool hit = g.intersects(o.box) || (hb && hb->intersects(o.box));
    if (!hit || (touching_source && !(hb && hb->intersects(o.box)))) continue;
    const Box moved = o.box.translated(delta);
    if (box_hits_statics(s.scene, moved)) return false;
    for (const auto& other : objects)
      if (other.id != o.id && !other.held && moved.intersects(other.box)) return false;
    if (moved.intersects(g)) return false;
    o.box = moved;
    pushed.push_back(o.id);
  }
  s.scene.objects = std::move(objects);
  s.arm = next;
  sync_held_box(s);
  ev.pushed = std::move(pushed);
  return true;
}

}  // namespace detail

/// Magnetic grasp: attaches the source if the gripper point touches its box.
inline bool try_pickup(EpisodeState& s) {
  if (s.arm.holding) return false;
  SceneObject* src = s.scene.find(s.source_id);
  const Point3 g = s.gripper_world();
  if (!src->box.inflated(s.config.arm.touch_tolerance).contains(g)) return false;
  s.arm.holding = src->id;
  s.arm.attach_offset = rotate_yaw(src->box.center() - g, -s.true_pose.yaw);
  src->held = true;
  s.picked_up = true;
  return true;
}

inline bool check_success(const EpisodeState& s) {
  if (!s.picked_up) return false;
  return distance(s.source().box.center(), s.dest().box.center()) < s.config.success_distance;
}

// ---------------------------------------------------------------------------
// Episode construction and stepping
// ---------------------------------------------------------------------------

struct StepResult {
  Observation observation;
  StepEvents events;
  RewardLedger reward;
};

namespace detail {

struct Perception {
  Observation obs;
  bool source_visible = false;
  bool dest_visible = false;
};

inline Perception perceive(EpisodeState& s, const NoiseSpecs& noise, EpisodeRng& rng) {
  const RenderedFrames frames = render(s.scene, s.camera_world(), s.config.camera);
  Perception p;
  p.obs.depth = apply_depth_noise(frames.depth, noise.depth, rng.depth);
  p.obs.source_mask = degrade(frames.instances, s.source_id, noise.source_mask, rng.source_mask);
  p.obs.dest_mask = degrade(frames.instances, s.dest_id, noise.dest_mask, rng.dest_mask);
  for (auto id : frames.instances.ids) {
    if (id == s.source_id) p.source_visible = true;
    if (id == s.dest_id) p.dest_visible = true;
  }
  p.obs.arm = s.arm;
  p.obs.dead_reckoned = s.dead_reckoning.pose_estimate;
  return p;
}

inline void update_estimates(EpisodeState& s, const Observation& obs) {
  const auto& cfg = s.config;
  s.dest_est = estimate_step(s.dest_est, {obs.dest_mask, obs.depth, cfg.camera, cfg.camera_mount, obs.ego_motion});
  if (s.arm.holding && *s.arm.holding == s.source_id) {
    // Held: the arm kinematics pin the source, no visual tracking.
    s.source_est.status = EstimateStatus::Tracking;
    s.source_est.position = s.arm.held_center_agent();
    s.source_est.steps_since_seen = 0;
  } else {
    s.source_est = estimate_step(s.source_est, {obs.source_mask, obs.depth, cfg.camera, cfg.camera_mount, obs.ego_motion});
  }
}

}  // namespace detail

/// Builds the initial state and first observation for a task.
inline std::pair<EpisodeState, Observation> make_episode(const TaskScene& task, const Pose& agent_start,
                                                         const EnvConfig& config, const NoiseSpecs& noise,
                                                         EpisodeRng& rng) {
  noise.source_mask.validate();
  noise.dest_mask.validate();
  noise.depth.validate();
  EpisodeState s;
  s.config = config;
  s.scene = task.scene;
  s.source_id = task.source_id;
  s.dest_id = task.dest_id;
  if (!s.scene.find(s.source_id)) throw InvalidInput("source object missing from scene");
  if (!s.scene.find(s.dest_id)) throw InvalidInput("destination object missing from scene");
  s.start_pose = agent_start;
  s.true_pose = agent_start;
  s.source_est = TargetEstimate::make(config.estimator_alpha, config.estimator_mode);
  s.dest_est = TargetEstimate::make(config.estimator_alpha, config.estimator_mode);
  if (detail::agent_collides(s, s.true_pose, s.arm)) throw InvalidInput("agent_start collides with the scene");
  for (const auto& o : s.scene.objects) s.initial_centers[o.id] = o.box.center();
  s.visited.insert(detail::visit_key(s.true_pose, config.visit_cell));

  auto p = detail::perceive(s, noise, rng);
  p.obs.ego_motion = Pose::identity();
  detail::update_estimates(s, p.obs);
  return {std::move(s), std::move(p.obs)};
}

inline StepResult step(EpisodeState& s, Action action, const NoiseSpecs& noise, EpisodeRng& rng) {
  if (s.done != EpisodeStatus::Running)
    throw ContractViolation("step() on a finished episode (" + std::string(status_name(s.done)) + ")");

  StepEvents ev;
  ev.action = action;
  ev.arm_distance_before = detail::objective_distance(s);
  const int objective_id = s.picked_up ? s.dest_id : s.source_id;

  bool ok;
  const BodyMotion commanded = commanded_motion(action);
  if (is_body_action(action)) {
    const BodyMotion actual = perturb_motion(commanded, noise.motion, rng.motion);
    ok = detail::execute_body_action(s, actual);
  } else {
    ok = detail::execute_arm_action(s, action, ev);
    if (ok) ev.picked_up_now = try_pickup(s);
  }
  ev.action_failed = !ok;
  ++s.step;

  const Pose prev_dr = s.dead_reckoning.pose_estimate;
  s.dead_reckoning = dead_reckon(s.dead_reckoning, commanded, ok);

  auto p = detail::perceive(s, noise, rng);
  p.obs.last_action_success = ok;
  p.obs.ego_motion = relative(prev_dr, s.dead_reckoning.pose_estimate);
  detail::update_estimates(s, p.obs);

  ev.source_visible = p.source_visible;
  ev.dest_visible = p.dest_visible;
  if (!s.source_seen && !p.obs.source_mask.empty()) s.source_seen = ev.source_first_seen = true;
  if (!s.dest_seen && !p.obs.dest_mask.empty()) s.dest_seen = ev.dest_first_seen = true;
  ev.new_state = s.visited.insert(detail::visit_key(s.true_pose, s.config.visit_cell)).second;

  if (!s.disturbed) {
    for (const auto& o : s.scene.objects) {
      if (o.id == s.source_id || o.id == s.dest_id) continue;
      if (distance(o.box.center(), s.initial_centers.at(o.id)) > s.config.disturb_threshold) {
        s.disturbed = ev.disturbed_now = true;
        break;
      }
    }
  }

  ev.arm_distance_after = distance(s.gripper_world(), s.scene.find(objective_id)->box.center());
  if (check_success(s)) {
    s.done = EpisodeStatus::Success;
    ev.success = true;
  } else if (s.step >= s.config.max_steps) {
    s.done = EpisodeStatus::Timeout;
    ev.timeout = true;
  }
  StepResult r{std::move(p.obs), std::move(ev), {}};
  r.reward = compute_reward(reward_inputs(r.events));
  return r;
}

// ---------------------------------------------------------------------------
// Logs and metrics
// ---------------------------------------------------------------------------

struct StepRecord {
  int t = 0;
  Action action = Action::MoveAhead;
  bool action_failed = false;
  bool picked_up_now = false;
  bool disturbed_now = false;
  bool new_state = false;
  bool source_first_seen = false;
  bool dest_first_seen = false;
  bool source_visible = false;
  bool dest_visible = false;
  RewardLedger reward;
  Pose true_pose;
  Pose dead_reckoned;
  TargetEstimate source_est;
  TargetEstimate dest_est;
  Point3 source_truth;  // agent frame
  Point3 dest_truth;
};

struct EpisodeSummary {
  int task_index = 0;
  std::string policy;
  bool picked_up = false;
  bool success = false;
  bool disturbed = false;
  int length = 0;
  int frames = 0;
  int source_visible_frames = 0;
  int dest_visible_frames = 0;
  double terminal_dest_error = std::numeric_limits<double>::quiet_NaN();
  double total_reward = 0.0;
  std::string status = "running";
};

struct EpisodeLog {
  EpisodeSummary summary;
  std::vector<StepRecord> steps;
};

struct Metrics {
  int n = 0;
  double pu = 0.0;
  double sr = 0.0;
  double srwd = 0.0;
  double mean_eplen = 0.0;
  double src_visibility = 0.0;
  double dst_visibility = 0.0;
  double mean_terminal_est_error = std::numeric_limits<double>::quiet_NaN();
};

inline Metrics compute_metrics(std::span<const EpisodeSummary> logs) {
  if (logs.empty()) throw InvalidInput("compute_metrics needs at least one episode");
  Metrics m;
  m.n = static_cast<int>(logs.size());
  int pu = 0, sr = 0, srwd = 0, n_err = 0;
  double len = 0.0, sv = 0.0, dv = 0.0, err = 0.0;
  for (const auto& e : logs) {
    pu += e.picked_up;
    sr += e.success;
    srwd += e.success && !e.disturbed;
    len += e.length;
    if (e.frames > 0) {
      sv += static_cast<double>(e.source_visible_frames) / e.frames;
      dv += static_cast<double>(e.dest_visible_frames) / e.frames;
    }
    if (std::isfinite(e.terminal_dest_error)) {
      err += e.terminal_dest_error;
      ++n_err;
    }
  }
  const double n = m.n;
  m.pu = pu / n;
  m.sr = sr / n;
  m.srwd = srwd / n;
  m.mean_eplen = len / n;
  m.src_visibility = sv / n;
  m.dst_visibility = dv / n;
  if (n_err > 0) m.mean_terminal_est_error = err / n_err;
  return m;
}

inline Metrics compute_metrics(std::span<const EpisodeLog> logs) {
  std::vector<EpisodeSummary> s;
  s.reserve(logs.size());
  for (const auto& l : logs) s.push_back(l.summary);
  return compute_metrics(std::span<const EpisodeSummary>(s));
}

/// Distance between the destination estimate and the destination's true
/// center, both in the current agent frame. NaN while unobserved.
inline double dest_estimate_error(const EpisodeState& s) {
  if (!s.dest_est.tracking()) return std::numeric_limits<double>::quiet_NaN();
  return distance(s.dest_est.position, s.to_agent(s.dest().box.center()));
}

}  // namespace objdis

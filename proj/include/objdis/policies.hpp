#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <map>
#include <string_view>
#include <utility>
#include <vector>

#include "objdis/estimator.hpp"
#include "objdis/frames.hpp"
#include "objdis/geometry.hpp"
#include "objdis/scene.hpp"
#include "objdis/task.hpp"

namespace objdis {

enum class PolicyKind { Estimator, GtDirection, MaskOnly };

inline std::string_view policy_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::Estimator: return "estimator";
    case PolicyKind::GtDirection: return "gt_direction";
    case PolicyKind::MaskOnly: return "mask_only";
  }
  return "?";
}

inline std::optional<PolicyKind> parse_policy(std::string_view s) {
  if (s == "estimator") return PolicyKind::Estimator;
  if (s == "gt_direction") return PolicyKind::GtDirection;
  if (s == "mask_only") return PolicyKind::MaskOnly;
  return std::nullopt;
}

enum class Phase { SearchSource, GotoSource, Grasp, SearchDest, GotoDest, Place };

inline std::string_view phase_name(Phase p) {
  constexpr std::string_view names[] = {"search_source", "goto_source", "grasp",
                                        "search_dest",   "goto_dest",   "place"};
  return names[static_cast<int>(p)];
}

struct PolicyConfig {
  int scan_steps = 8;
  int moves_between_scans = 6;
  int staleness_limit = 50;
  double turn_cost = 0.03;     // per 45 degree turn when picking a heading
  double revisit_cost = 0.05;  // per earlier visit to the next cell
  // manipulation starts when the target enters this window (agent frame)
  double reach_min_z = 0.2;
  double reach_max_z = 0.6;
  double reach_max_x = 0.3;
  // and stops when it leaves this one
  double leave_min_z = 0.1;
  double leave_max_z = 0.72;
  double leave_max_x = 0.42;
  double corridor_half_width = 0.3;
  double floor_margin = 0.012;  // depth points below this height count as floor
  double clearance_margin = 0.22;
  double travel_height = 1.12;  // held object bottom while carrying
  double carry_max_z = 0.35;
  double idle_max_z = 0.25;
  int max_arm_failures = 3;
  int bumps_before_escape = 3;
  bool use_planner = false;
  bool gt_uses_true_pose = false;
};

/// Static facts a policy may rely on: embodiment, canonical target sizes, and
/// (for the planner only) the static map with the start pose.
struct PolicyContext {
  CameraModel camera = CameraModel::default_camera();
  Pose camera_mount = Pose::make(0.0, 0.0, 1.0, 0.0);
  BodySpec body;
  ArmLimits arm;
  Point3 source_size{0.08, 0.08, 0.08};
  Point3 dest_size{0.08, 0.08, 0.08};
  const Scene* planner_map = nullptr;
  Pose planner_start;
};

struct PolicyState {
  Phase phase = Phase::SearchSource;
  int scan_budget = 8;
  int moves_since_scan = 0;
  int turns_without_move = 0;
  int arm_failures = 0;
  int bumps = 0;  // consecutive failed MoveAheads
  bool sidestep_right = true;
  std::optional<Action> last_action;
  std::deque<Action> pending;
  std::map<std::pair<int, int>, int> visits;
  std::vector<std::pair<double, double>> obstacles;  // dead-reckoned x, z of failed or unsafe steps
};

/// A policy's belief about one target, in its current agent frame.
struct TargetView {
  bool known = false;
  Point3 position;
  int staleness = 0;
};

/// Nearest depth return straight ahead inside a body-width corridor and a
/// height band, in the agent frame. Samples every second pixel. Returns inside
/// `ignore` (the held object) do not count.
inline double free_distance_ahead(const DepthFrame& depth, const CameraModel& cam, const Pose& mount,
                                  double half_width, double y_lo, double y_hi,
                                  const std::optional<Box>& ignore = std::nullopt) {
  double best = cam.max_range;
  for (int v = 0; v < depth.height; v += 2) {
    for (int u = 0; u < depth.width; u += 2) {
      const double d = depth.at(u, v);
      if (!(d > 0.0 && d < depth.max_range)) continue;
      const Point3 p = camera_to_agent_point(mount, {(u - cam.cx) * d / cam.fx, (v - cam.cy) * d / cam.fy, d});
      if (!(p.z > 0.0 && std::abs(p.x) < half_width && p.y > y_lo && p.y < y_hi)) continue;
      if (ignore && ignore->contains(p)) continue;
      best = std::min(best, p.z);
    }
  }
  return best;
}

/// Current-frame backprojected mask centroid in the agent frame.
inline std::optional<Point3> mask_measurement(const DepthFrame& depth, const Mask& mask, const PolicyContext& ctx) {
  const auto c = backproject_masked_centroid(depth, mask, ctx.camera);
  if (!c) return std::nullopt;
  return camera_to_agent_point(ctx.camera_mount, *c);
}

namespace detail {

constexpr double kArmEps = 1e-9;

inline bool can_raise(const ArmState& arm, const ArmLimits& lim) {
  return arm.gripper_offset.y + lim.step <= lim.workspace_max.y + kArmEps ||
         arm.base_height + lim.step <= lim.base_max + kArmEps;
}

inline Action raise(const ArmState& arm, const ArmLimits& lim) {
  if (arm.gripper_offset.y + lim.step <= lim.workspace_max.y + kArmEps) return Action::GripperPlusY;
  if (arm.base_height + lim.step <= lim.base_max + kArmEps) return Action::ArmBaseUp;
  return Action::GripperPlusY;
}

inline Action lower(const ArmState& arm, const ArmLimits& lim) {
  if (arm.gripper_offset.y - lim.step >= lim.workspace_min.y - kArmEps) return Action::GripperMinusY;
  if (arm.base_height - lim.step >= lim.base_min - kArmEps) return Action::ArmBaseDown;
  return Action::GripperMinusY;
}

inline Action horizontal(const Point3& d) {
  if (std::abs(d.x) > std::abs(d.z)) return d.x > 0 ? Action::GripperPlusX : Action::GripperMinusX;
  return d.z > 0 ? Action::GripperPlusZ : Action::GripperMinusZ;
}

/// Horizontal gripper step toward `d` that the workspace still allows, larger
/// component first; components under `dead_band` are ignored.
inline std::optional<Action> horizontal_step(const Point3& d, const ArmState& arm, const ArmLimits& lim,
                                             double dead_band) {
  const Point3& g = arm.gripper_offset;
  auto x_move = [&]() -> std::optional<Action> {
    if (std::abs(d.x) < dead_band) return std::nullopt;
    if (d.x > 0 && g.x + lim.step <= lim.workspace_max.x + kArmEps) return Action::GripperPlusX;
    if (d.x < 0 && g.x - lim.step >= lim.workspace_min.x - kArmEps) return Action::GripperMinusX;
    return std::nullopt;
  };
  auto z_move = [&]() -> std::optional<Action> {
    if (std::abs(d.z) < dead_band) return std::nullopt;
    if (d.z > 0 && g.z + lim.step <= lim.workspace_max.z + kArmEps) return Action::GripperPlusZ;
    if (d.z < 0 && g.z - lim.step >= lim.workspace_min.z - kArmEps) return Action::GripperMinusZ;
    return std::nullopt;
  };
  if (std::abs(d.x) > std::abs(d.z)) {
    if (auto a = x_move()) return a;
    return z_move();
  }
  if (auto a = z_move()) return a;
  return x_move();
}

inline Action largest_component(const Point3& d, const ArmState& arm, const ArmLimits& lim) {
  const double ax = std::abs(d.x), ay = std::abs(d.y), az = std::abs(d.z);
  if (ay > ax && ay > az) return d.y > 0 ? raise(arm, lim) : lower(arm, lim);
  return horizontal(d);
}

inline std::pair<int, int> cell_of(double x, double z) {
  return {static_cast<int>(std::lround(x / kMoveStep)), static_cast<int>(std::lround(z / kMoveStep))};
}

}  // namespace detail

/// Phase machine shared by all three policies; they differ only in the
/// TargetViews they feed it.
class Controller {
 public:
  Controller(const PolicyConfig& cfg, const PolicyContext& ctx) : cfg_(cfg), ctx_(ctx) {}

  Action decide(const TargetView& source, const TargetView& dest, const Observation& obs, PolicyState& st) const {
    const Action a = decide_impl(source, dest, obs, st);
    st.last_action = a;
    return a;
  }

 private:
  const PolicyConfig& cfg_;
  const PolicyContext& ctx_;

  bool last_failed(const Observation& obs, const PolicyState& st) const {
    return st.last_action && !obs.last_action_success;
  }

  bool in_reach(const Point3& p) const {
    return p.z >= cfg_.reach_min_z && p.z <= cfg_.reach_max_z && std::abs(p.x) <= cfg_.reach_max_x;
  }

  bool out_of_reach(const Point3& p) const {
    return p.z > cfg_.leave_max_z || p.z < cfg_.leave_min_z || std::abs(p.x) > cfg_.leave_max_x;
  }

  /// Whether the arm alone can finish from here: the gripper can touch the
  /// source, or the held object can get within success range of the
  /// destination (with 10 cm of slack).
  bool within_workspace(const Point3& p, const Observation& obs) const {
    const ArmLimits& lim = ctx_.arm;
    if (obs.arm.holding) {
      const Point3& a = obs.arm.attach_offset;
      return p.z <= lim.workspace_max.z + a.z + 0.1 && p.z >= cfg_.leave_min_z &&
             p.x <= lim.workspace_max.x + a.x + 0.1 && p.x >= lim.workspace_min.x + a.x - 0.1;
    }
    const Point3 half = ctx_.source_size * 0.5;
    return p.z <= lim.workspace_max.z + half.z + 0.02 && p.z >= cfg_.leave_min_z &&
           std::abs(p.x) <= lim.workspace_max.x + half.x + 0.02;
  }

  /// Room for one more step: the body cylinder and the arm (with anything it
  /// holds) are checked in their own height bands, each against its own reach.
  bool clear_ahead(const Observation& obs, double extra = 0.0) const {
    const double margin = cfg_.clearance_margin + extra;
    auto free = [&](double lo, double hi, const std::optional<Box>& ignore) {
      return free_distance_ahead(obs.depth, ctx_.camera, ctx_.camera_mount, cfg_.corridor_half_width, lo, hi,
                                 ignore);
    };
    if (free(cfg_.floor_margin, ctx_.body.height + 0.05, std::nullopt) < ctx_.body.radius + margin) return false;
    if (obs.arm.holding) {
      // the held box stays world-aligned, so bound its footprint for any yaw
      const Point3 c = obs.arm.held_center_agent();
      const Point3& sz = ctx_.source_size;
      const double r = std::hypot(sz.x, sz.z) / 2;
      const Point3 half{r + 0.03, sz.y / 2 + 0.03, r + 0.03};
      const Box held{c - half, c + half};
      return free(held.min.y, held.max.y, held) >= c.z + r + margin;
    }
    const Point3 g = obs.arm.gripper_agent();
    return free(g.y - 0.05, g.y + 0.05, std::nullopt) >= g.z + ctx_.arm.gripper_half + margin;
  }

  Action sidestep(PolicyState& st) const {
    const Action turn = st.sidestep_right ? Action::RotateRight : Action::RotateLeft;
    const Action back = st.sidestep_right ? Action::RotateLeft : Action::RotateRight;
    st.sidestep_right = !st.sidestep_right;
    st.pending = {Action::MoveAhead, back};
    return turn;
  }

  /// Travel posture: gripper pulled in; a held object lifted over furniture.
  std::optional<Action> travel_posture(const Observation& obs) const {
    if (!obs.arm.holding) {
      if (obs.arm.gripper_offset.z > cfg_.idle_max_z) return Action::GripperMinusZ;
      return std::nullopt;
    }
    const Point3 h = obs.arm.held_center_agent();
    if (h.y - ctx_.source_size.y / 2 < cfg_.travel_height && detail::can_raise(obs.arm, ctx_.arm))
      return detail::raise(obs.arm, ctx_.arm);
    if (obs.arm.gripper_offset.z > cfg_.carry_max_z) return Action::GripperMinusZ;
    return std::nullopt;
  }

  void enter_search(PolicyState& st, Phase phase) const {
    st.phase = phase;
    st.scan_budget = cfg_.scan_steps;
    st.moves_since_scan = 0;
    st.turns_without_move = 0;
    st.pending.clear();
  }

  Action search(const Observation& obs, PolicyState& st) const {
    if (auto a = travel_posture(obs)) return *a;
    if (st.scan_budget > 0) {
      --st.scan_budget;
      return Action::RotateRight;
    }
    if (st.moves_since_scan >= cfg_.moves_between_scans) {
      st.moves_since_scan = 0;
      st.scan_budget = cfg_.scan_steps - 1;
      return Action::RotateRight;
    }
    const Point3 ahead = transform_point(obs.dead_reckoned, {0.0, 0.0, kMoveStep});
    const bool fresh = !st.visits.count(detail::cell_of(ahead.x, ahead.z)) || st.turns_without_move >= 8;
    const bool bumped = last_failed(obs, st) && *st.last_action == Action::MoveAhead;
    if (bumped) remember_blocked(obs, st);
    if (!bumped && fresh && !known_blocked(ahead, st) && clear_ahead(obs, 0.2)) {
      ++st.moves_since_scan;
      st.turns_without_move = 0;
      return Action::MoveAhead;
    }
    ++st.turns_without_move;
    return Action::RotateRight;
  }

  /// Agent-frame position of the next A* waypoint, when the planner is on and
  /// a path exists.
  std::optional<Point3> planner_waypoint(const Point3& target, const Observation& obs) const {
    if (!cfg_.use_planner || !ctx_.planner_map) return std::nullopt;
    const Scene& map = *ctx_.planner_map;
    const Pose here = compose(ctx_.planner_start, obs.dead_reckoned);
    const Point3 goal = transform_point(here, target);
    const auto cells = reachable_positions(map, kMoveStep, ctx_.body, false);
    auto nearest = [&](double x, double z, double lo, double hi) -> std::optional<GridCell> {
      std::optional<GridCell> best;
      double bd = std::numeric_limits<double>::infinity();
      for (const auto& c : cells) {
        const double d = std::hypot(c.x - x, c.z - z);
        if (d < lo || d > hi || d >= bd) continue;
        bd = d;
        best = c;
      }
      return best;
    };
    const auto from = nearest(here.x, here.z, 0.0, std::numeric_limits<double>::infinity());
    const auto to = nearest(goal.x, goal.z, 0.25, 0.6);
    if (!from || !to) return std::nullopt;
    const auto path = grid_path(map, *from, *to, kMoveStep, ctx_.body, false);
    if (path.size() < 2) return std::nullopt;
    return transform_point(invert(here), {path[1].x, 0.0, path[1].z});
  }

  /// Low clutter right in front of the body is below the camera's view, so
  /// failed steps are remembered as obstacle points.
  void remember_blocked(const Observation& obs, PolicyState& st) const {
    const Point3 q = transform_point(obs.dead_reckoned, {0.0, 0.0, kMoveStep});
    st.obstacles.emplace_back(q.x, q.z);
  }

  bool known_blocked(const Point3& q, const PolicyState& st) const {
    for (const auto& [x, z] : st.obstacles)
      if (std::hypot(x - q.x, z - q.z) < 0.12) return true;
    return false;
  }

  Action go_to(const Point3& target, const Observation& obs, PolicyState& st, Phase manip) const {
    if (auto a = travel_posture(obs)) return *a;
    auto start_manip = [&] {
      st.phase = manip;
      st.arm_failures = 0;
      return manipulate(target, obs, st);
    };
    const bool bumped = last_failed(obs, st) && *st.last_action == Action::MoveAhead;
    if (bumped) {
      remember_blocked(obs, st);
      if (within_workspace(target, obs)) return start_manip();
      if (st.bumps >= cfg_.bumps_before_escape) {
        // wedged: turn 135 degrees and try a step
        st.pending = {Action::RotateRight, Action::RotateRight, Action::MoveAhead};
        return Action::RotateRight;
      }
    }
    const Point3 aim = planner_waypoint(target, obs).value_or(target);
    const Pose& here = obs.dead_reckoned;
    const Point3 goal = transform_point(here, aim);
    // Greedy over the eight headings: the next cell closest to the goal, with
    // a small charge per turn and per earlier visit.
    for (int attempt = 0; attempt < 2; ++attempt) {
      int best_k = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int k = -3; k <= 4; ++k) {
        const double yaw = k * kRotateStep;
        const Point3 q = transform_point(here, {std::sin(yaw) * kMoveStep, 0.0, std::cos(yaw) * kMoveStep});
        double score = std::hypot(goal.x - q.x, goal.z - q.z) + cfg_.turn_cost * std::abs(k);
        const auto it = st.visits.find(detail::cell_of(q.x, q.z));
        if (it != st.visits.end()) score += cfg_.revisit_cost * it->second;
        if (known_blocked(q, st)) score += 10.0;
        if (score < best) {
          best = score;
          best_k = k;
        }
      }
      if (best_k != 0) return best_k > 0 ? Action::RotateRight : Action::RotateLeft;
      if (clear_ahead(obs)) return Action::MoveAhead;
      if (within_workspace(target, obs)) return start_manip();
      remember_blocked(obs, st);
    }
    return sidestep(st);
  }

  Action grasp(const Point3& target, const Observation& obs) const {
    const Point3 g = obs.arm.gripper_agent();
    const Point3 d = target - g;
    const double top = target.y + ctx_.source_size.y / 2;
    if (std::hypot(d.x, d.z) > 0.06) {
      if (g.y < top + 0.04 && detail::can_raise(obs.arm, ctx_.arm)) return detail::raise(obs.arm, ctx_.arm);
      if (auto a = detail::horizontal_step(d, obs.arm, ctx_.arm, 0.0)) return *a;
    }
    if (std::abs(d.x) < 0.025 && std::abs(d.y) < 0.025 && std::abs(d.z) < 0.025)
      return detail::lower(obs.arm, ctx_.arm);
    return detail::largest_component(d, obs.arm, ctx_.arm);
  }

  Action place(const Point3& dest, const Observation& obs, const PolicyState& st) const {
    const Point3 h = obs.arm.held_center_agent();
    const Point3 d = dest - h;
    const double horiz = std::hypot(d.x, d.z);
    const double held_bottom = h.y - ctx_.source_size.y / 2;
    const double dest_top = dest.y + ctx_.dest_size.y / 2;
    if (horiz > 0.04) {
      if (held_bottom < dest_top + 0.04 && detail::can_raise(obs.arm, ctx_.arm))
        return detail::raise(obs.arm, ctx_.arm);
      if (auto a = detail::horizontal_step(d, obs.arm, ctx_.arm, 0.025)) return *a;
    }
    const bool blocked_down = last_failed(obs, st) &&
                              (*st.last_action == Action::GripperMinusY || *st.last_action == Action::ArmBaseDown);
    if (blocked_down)
      if (auto a = detail::horizontal_step(d, obs.arm, ctx_.arm, 0.025)) return *a;
    return detail::lower(obs.arm, ctx_.arm);
  }

  Action manipulate(const Point3& target, const Observation& obs, const PolicyState& st) const {
    return st.phase == Phase::Place ? place(target, obs, st) : grasp(target, obs);
  }

  Action decide_impl(const TargetView& source, const TargetView& dest, const Observation& obs, PolicyState& st) const {
    ++st.visits[detail::cell_of(obs.dead_reckoned.x, obs.dead_reckoned.z)];
    if (st.last_action == Action::MoveAhead) st.bumps = obs.last_action_success ? 0 : st.bumps + 1;
    const bool holding = obs.arm.holding.has_value();
    const bool source_phase =
        st.phase == Phase::SearchSource || st.phase == Phase::GotoSource || st.phase == Phase::Grasp;
    if (holding && source_phase) enter_search(st, Phase::SearchDest);

    const TargetView& target = holding ? dest : source;
    const Phase search_phase = holding ? Phase::SearchDest : Phase::SearchSource;
    const Phase goto_phase = holding ? Phase::GotoDest : Phase::GotoSource;
    const Phase manip_phase = holding ? Phase::Place : Phase::Grasp;
    const bool usable = target.known && target.staleness <= cfg_.staleness_limit;

    if (st.phase == manip_phase) {
      if (last_failed(obs, st) && !is_body_action(*st.last_action))
        ++st.arm_failures;
      else if (!last_failed(obs, st))
        st.arm_failures = 0;
      if (!usable) {
        enter_search(st, search_phase);
      } else if (st.arm_failures >= cfg_.max_arm_failures) {
        // stuck against something: back off sideways and re-approach
        st.phase = goto_phase;
        st.arm_failures = 0;
        return sidestep(st);
      } else if (out_of_reach(target.position) && !within_workspace(target.position, obs)) {
        st.phase = goto_phase;
      } else {
        return manipulate(target.position, obs, st);
      }
    }

    if (st.phase == search_phase && usable) {
      st.phase = goto_phase;
      st.pending.clear();
    }
    if (st.phase == goto_phase && !usable) enter_search(st, search_phase);

    if (!st.pending.empty()) {
      if (last_failed(obs, st) && *st.last_action == Action::MoveAhead) {
        st.pending.clear();
      } else {
        const Action a = st.pending.front();
        st.pending.pop_front();
        return a;
      }
    }

    if (st.phase == goto_phase) {
      if (in_reach(target.position)) {
        st.phase = manip_phase;
        st.arm_failures = 0;
        return manipulate(target.position, obs, st);
      }
      return go_to(target.position, obs, st, manip_phase);
    }
    return search(obs, st);
  }
};

/// Acts on the running estimates as its only target knowledge.
inline Action estimator_policy(const Observation& obs, const TargetEstimate& source, const TargetEstimate& dest,
                               PolicyState& st, const PolicyConfig& cfg = {}, const PolicyContext& ctx = {}) {
  auto view = [](const TargetEstimate& e) { return TargetView{e.tracking(), e.position, e.steps_since_seen}; };
  return Controller(cfg, ctx).decide(view(source), view(dest), obs, st);
}

/// Target centers in the episode-start agent frame.
struct GtTargets {
  Point3 source_in_start;
  Point3 dest_in_start;
};

/// Start-frame ground truth re-expressed through the dead-reckoned pose, or
/// through `true_pose_in_start` when the config asks for a perfect GPS.
inline Action gt_direction_policy(const Observation& obs, const GtTargets& targets, PolicyState& st,
                                  const PolicyConfig& cfg = {}, const PolicyContext& ctx = {},
                                  const std::optional<Pose>& true_pose_in_start = std::nullopt) {
  const Pose frame = cfg.gt_uses_true_pose && true_pose_in_start ? *true_pose_in_start : obs.dead_reckoned;
  const Pose to_agent = invert(frame);
  TargetView src{true, transform_point(to_agent, targets.source_in_start), 0};
  if (obs.arm.holding) src.position = obs.arm.held_center_agent();
  const TargetView dst{true, transform_point(to_agent, targets.dest_in_start), 0};
  return Controller(cfg, ctx).decide(src, dst, obs, st);
}

/// Memoryless: this frame's mask centroid or nothing.
inline Action mask_only_policy(const Observation& obs, PolicyState& st, const PolicyConfig& cfg = {},
                               const PolicyContext& ctx = {}) {
  TargetView src, dst;
  if (obs.arm.holding) {
    src = {true, obs.arm.held_center_agent(), 0};
  } else if (auto m = mask_measurement(obs.depth, obs.source_mask, ctx)) {
    src = {true, *m, 0};
  }
  if (auto m = mask_measurement(obs.depth, obs.dest_mask, ctx)) dst = {true, *m, 0};
  return Controller(cfg, ctx).decide(src, dst, obs, st);
}

}  // namespace objdis

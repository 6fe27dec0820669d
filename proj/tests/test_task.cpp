#include <gtest/gtest.h>

#include "objdis/harness.hpp"
#include "objdis/task.hpp"

using namespace objdis;

namespace {

SceneObject cube(int id, Category c, const Point3& center, double half) {
  SceneObject o;
  o.id = id;
  o.category = c;
  o.box = Box::from_center(center, {half, half, half});
  return o;
}

// 4 x 4 m empty room; source and destination parked in a far corner.
TaskScene small_task() {
  TaskScene t;
  t.scene.bounds = {{0, 0, 0}, {4, 2.5, 4}};
  t.scene.objects.push_back(cube(1, Category::Apple, {0.3, 0.5, 0.3}, 0.04));
  t.scene.objects.push_back(cube(2, Category::Pot, {0.6, 0.5, 0.3}, 0.08));
  t.source_id = 1;
  t.dest_id = 2;
  return t;
}

struct Env {
  EpisodeState state;
  Observation obs;
  NoiseSpecs noise;
  EpisodeRng rng = EpisodeRng::from_seed(1);

  Env(const TaskScene& t, const Pose& start) {
    auto [s, o] = make_episode(t, start, {}, noise, rng);
    state = std::move(s);
    obs = std::move(o);
  }
  StepResult act(Action a) { return step(state, a, noise, rng); }
};

bool statics_penetrated(const EpisodeState& s) {
  for (const auto& b : s.scene.statics)
    if (cylinder_hits_box(s.true_pose.x, s.true_pose.z, s.config.body, b)) return true;
  if (!cylinder_inside_room(s.true_pose.x, s.true_pose.z, s.config.body, s.scene.bounds)) return true;
  return box_hits_statics(s.scene, detail::gripper_box(s, s.true_pose, s.arm));
}

}  // namespace

TEST(Actions, ElevenNamedVariants) {
  EXPECT_EQ(kNumActions, 11);
  for (int i = 0; i < kNumActions; ++i) {
    const auto a = static_cast<Action>(i);
    EXPECT_EQ(parse_action(action_name(a)), a);
  }
  EXPECT_FALSE(parse_action("Jump"));
  EXPECT_TRUE(is_body_action(Action::RotateLeft));
  EXPECT_FALSE(is_body_action(Action::GripperPlusY));
}

TEST(Step, MoveAheadIntoWallFails) {
  Env env(small_task(), Pose::make(2.0, 3.75, 0.0, 0.0));
  const Pose before = env.state.true_pose;
  const StepResult r = env.act(Action::MoveAhead);
  EXPECT_TRUE(r.events.action_failed);
  EXPECT_FALSE(r.observation.last_action_success);
  EXPECT_EQ(env.state.true_pose, before);
  EXPECT_EQ(env.state.dead_reckoning.pose_estimate, Pose::identity());
  EXPECT_DOUBLE_EQ(r.reward.failed_action, -0.03);
  EXPECT_DOUBLE_EQ(r.reward.step, -0.01);
}

TEST(Step, MoveAheadInOpenSpace) {
  Env env(small_task(), Pose::make(2.0, 2.0, 0.0, 0.0));
  const StepResult r = env.act(Action::MoveAhead);
  EXPECT_FALSE(r.events.action_failed);
  EXPECT_NEAR(env.state.true_pose.z, 2.2, 1e-12);
  EXPECT_TRUE(r.events.new_state);
  EXPECT_NEAR(r.reward.visit_new_state, 0.1, 1e-15);
}

TEST(Step, GripperPlusZMovesFiveCentimeters) {
  Env env(small_task(), Pose::make(2.0, 2.0, 0.0, 0.0));
  const double z0 = env.state.arm.gripper_offset.z;
  const StepResult r = env.act(Action::GripperPlusZ);
  EXPECT_FALSE(r.events.action_failed);
  EXPECT_NEAR(env.state.arm.gripper_offset.z, z0 + 0.05, 1e-12);
}

TEST(Step, ArmClampsToWorkspace) {
  Env env(small_task(), Pose::make(2.0, 2.0, 0.0, 0.0));
  bool failed = false;
  for (int i = 0; i < 20 && !failed; ++i) failed = env.act(Action::GripperPlusX).events.action_failed;
  EXPECT_TRUE(failed);
  EXPECT_NEAR(env.state.arm.gripper_offset.x, 0.4, 1e-9);
}

TEST(Step, TimeoutAtTwoHundred) {
  Env env(small_task(), Pose::make(2.0, 2.0, 0.0, 0.0));
  StepResult r;
  for (int i = 0; i < 200; ++i) {
    ASSERT_EQ(env.state.done, EpisodeStatus::Running);
    r = env.act(Action::RotateRight);
  }
  EXPECT_TRUE(r.events.timeout);
  EXPECT_EQ(env.state.done, EpisodeStatus::Timeout);
  EXPECT_EQ(env.state.step, 200);
  EXPECT_THROW(env.act(Action::RotateRight), ContractViolation);
}

TEST(Pickup, GripperInsideSourceAttaches) {
  TaskScene t = small_task();
  t.scene.objects[0].box = Box::from_center({2.0, 0.8, 2.33}, {0.03, 0.03, 0.03});
  Env env(t, Pose::make(2.0, 2.0, 0.0, 0.0));
  StepResult r;
  for (int i = 0; i < 4; ++i) {
    r = env.act(Action::GripperPlusZ);
    if (i < 3) EXPECT_FALSE(r.events.picked_up_now);
  }
  EXPECT_TRUE(r.events.picked_up_now);
  EXPECT_TRUE(env.state.picked_up);
  EXPECT_EQ(env.state.arm.holding, std::optional<int>(1));
  EXPECT_DOUBLE_EQ(r.reward.pickup, 5.0);
  // the held object follows the gripper
  const Point3 before = env.state.source().box.center();
  env.act(Action::GripperPlusY);
  EXPECT_NEAR(env.state.source().box.center().y - before.y, 0.05, 1e-12);
}

TEST(Pickup, FarGripperDoesNotAttach) {
  TaskScene t = small_task();
  t.scene.objects[0].box = Box::from_center({2.0, 0.8, 2.8}, {0.03, 0.03, 0.03});
  Env env(t, Pose::make(2.0, 2.0, 0.0, 0.0));
  EXPECT_FALSE(try_pickup(env.state));
  EXPECT_FALSE(env.state.picked_up);
}

TEST(Pickup, TouchingOtherObjectDisturbsWithoutAttaching) {
  TaskScene t = small_task();
  t.scene.objects.push_back(cube(3, Category::Bread, {2.0, 0.8, 2.33}, 0.03));
  Env env(t, Pose::make(2.0, 2.0, 0.0, 0.0));
  StepResult r;
  for (int i = 0; i < 4; ++i) r = env.act(Action::GripperPlusZ);
  EXPECT_FALSE(r.events.action_failed);
  EXPECT_FALSE(env.state.picked_up);
  EXPECT_FALSE(env.state.arm.holding);
  EXPECT_EQ(r.events.pushed, std::vector<int>{3});
  EXPECT_TRUE(r.events.disturbed_now);
  EXPECT_TRUE(env.state.disturbed);
  // monotone: pulling back does not clear it
  for (int i = 0; i < 3; ++i) EXPECT_FALSE(env.act(Action::GripperMinusZ).events.disturbed_now);
  EXPECT_TRUE(env.state.disturbed);
}

TEST(CheckSuccess, StrictTwentyCentimeters) {
  EpisodeState s;
  s.scene.objects = {cube(1, Category::Apple, {0.25, 1, 1}, 0.0), cube(2, Category::Pot, {0.44, 1, 1}, 0.0)};
  s.source_id = 1;
  s.dest_id = 2;
  s.picked_up = true;
  EXPECT_TRUE(check_success(s));  // 0.19 m
  s.scene.objects[1].box = Box::from_center({0.45, 1, 1}, {0, 0, 0});
  ASSERT_EQ(distance(s.source().box.center(), s.dest().box.center()), 0.2);
  EXPECT_FALSE(check_success(s));
  s.scene.objects[1].box = Box::from_center({0.35, 1, 1}, {0, 0, 0});
  s.picked_up = false;
  EXPECT_FALSE(check_success(s));  // 0.10 m but never picked up
}

TEST(Reward, Examples) {
  EXPECT_DOUBLE_EQ(compute_reward({}).total, -0.01);
  RewardInputs failed;
  failed.action_failed = true;
  EXPECT_DOUBLE_EQ(compute_reward(failed).total, -0.04);
  RewardInputs pick;
  pick.picked_up_now = true;
  pick.arm_distance_before = 0.30;
  pick.arm_distance_after = 0.25;
  EXPECT_NEAR(compute_reward(pick).total, 5.0 - 0.01 + 0.05, 1e-12);
  RewardInputs seen;
  seen.targets_first_observed = 2;
  seen.new_state = true;
  seen.success = true;
  EXPECT_NEAR(compute_reward(seen).total, -0.01 + 2.0 + 0.1 + 10.0, 1e-12);
}

TEST(Reward, TotalIsSumOfComponents) {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    RewardInputs in;
    in.action_failed = bernoulli(rng, 0.5);
    in.success = bernoulli(rng, 0.5);
    in.targets_first_observed = uniform_index(rng, 3);
    in.new_state = bernoulli(rng, 0.5);
    in.picked_up_now = bernoulli(rng, 0.5);
    in.arm_distance_before = uniform(rng, 0, 3);
    in.arm_distance_after = uniform(rng, 0, 3);
    const RewardLedger r = compute_reward(in);
    ASSERT_NEAR(r.total,
                r.step + r.failed_action + r.success + r.object_observed + r.visit_new_state + r.pickup + r.arm_distance,
                1e-12);
  }
}

TEST(Reward, ObjectObservedOncePerTarget) {
  TaskScene t = small_task();
  Env env(t, Pose::make(2.0, 2.0, 0.0, kPi));  // facing the corner with both targets
  int src = 0, dst = 0;
  for (int i = 0; i < 16; ++i) {
    const StepResult r = env.act(Action::RotateRight);
    src += r.events.source_first_seen;
    dst += r.events.dest_first_seen;
  }
  EXPECT_EQ(src, 1);
  EXPECT_EQ(dst, 1);
}

TEST(Metrics, CountingExample) {
  std::vector<EpisodeSummary> logs(4);
  logs[0].picked_up = true;
  logs[0].success = true;
  logs[0].disturbed = true;
  logs[1].picked_up = true;
  const Metrics m = compute_metrics(std::span<const EpisodeSummary>(logs));
  EXPECT_DOUBLE_EQ(m.pu, 0.5);
  EXPECT_DOUBLE_EQ(m.sr, 0.25);
  EXPECT_DOUBLE_EQ(m.srwd, 0.0);
}

TEST(Metrics, AllUntouchedSuccesses) {
  std::vector<EpisodeSummary> logs(3);
  for (auto& l : logs) l.picked_up = l.success = true;
  const Metrics m = compute_metrics(std::span<const EpisodeSummary>(logs));
  EXPECT_EQ(m.sr, 1.0);
  EXPECT_EQ(m.srwd, 1.0);
}

TEST(Metrics, EmptyIsAnError) {
  EXPECT_THROW(compute_metrics(std::span<const EpisodeSummary>()), InvalidInput);
}

TEST(Metrics, ImplicationChainOnRandomLogs) {
  Rng rng(9);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<EpisodeSummary> logs(1 + uniform_index(rng, 30));
    for (auto& l : logs) {
      l.picked_up = bernoulli(rng, 0.6);
      l.success = l.picked_up && bernoulli(rng, 0.5);
      l.disturbed = bernoulli(rng, 0.3);
      l.frames = l.length = 1 + uniform_index(rng, 200);
      l.source_visible_frames = uniform_index(rng, l.frames + 1);
    }
    const Metrics m = compute_metrics(std::span<const EpisodeSummary>(logs));
    ASSERT_LE(m.srwd, m.sr);
    ASSERT_LE(m.sr, m.pu);
    ASSERT_GE(m.src_visibility, 0.0);
    ASSERT_LE(m.src_visibility, 1.0);
  }
}

TEST(Episode, RandomActionsNeverPenetrateStatics) {
  const auto ds = generate_task_dataset({1003, 1004, 1005}, {}, 1);
  ASSERT_FALSE(ds.tasks.empty());
  Rng pick(5);
  for (const auto& cfg : ds.tasks) {
    const TaskScene t = instantiate_task(generate_scene(cfg.scene_seed, {}), cfg);
    NoiseSpecs noise;
    noise.motion.multiplier = 1.0;
    EpisodeRng rng = EpisodeRng::from_seed(cfg.scene_seed);
    auto [s, obs] = make_episode(t, cfg.agent_start, {}, noise, rng);
    bool disturbed = false;
    while (s.done == EpisodeStatus::Running) {
      // bias toward body motion so the agent actually travels
      const Action a = bernoulli(pick, 0.5) ? static_cast<Action>(uniform_index(pick, 3))
                                            : static_cast<Action>(uniform_index(pick, kNumActions));
      step(s, a, noise, rng);
      ASSERT_FALSE(statics_penetrated(s)) << "step " << s.step;
      ASSERT_TRUE(!disturbed || s.disturbed);
      disturbed = s.disturbed;
      ASSERT_LE(s.step, 200);
      if (s.done == EpisodeStatus::Success) ASSERT_TRUE(s.picked_up);
    }
  }
}

TEST(Episode, DeterministicLog) {
  const auto ds = generate_task_dataset({1003}, {}, 1);
  ASSERT_EQ(ds.tasks.size(), 1u);
  NoiseSpecs noise;
  noise.motion.multiplier = 0.7;
  noise.depth = DepthNoiseSpec::kinect_like();
  noise.dest_mask.present_prob = 0.5;
  const EpisodeLog a = run_episode(ds.tasks[0], {PolicyKind::Estimator, {}}, noise, 77);
  const EpisodeLog b = run_episode(ds.tasks[0], {PolicyKind::Estimator, {}}, noise, 77);
  EXPECT_EQ(log_jsonl(a), log_jsonl(b));
  const EpisodeLog c = run_episode(ds.tasks[0], {PolicyKind::Estimator, {}}, noise, 78);
  EXPECT_NE(log_jsonl(a), log_jsonl(c));
}

TEST(Episode, ZeroNoiseDeadReckoningIsExact) {
  const auto ds = generate_task_dataset({1010}, {}, 1);
  ASSERT_EQ(ds.tasks.size(), 1u);
  const EpisodeLog log = run_episode(ds.tasks[0], {PolicyKind::Estimator, {}}, {}, 3);
  const Pose start = ds.tasks[0].agent_start;
  for (const auto& r : log.steps) {
    const Pose rel = relative(start, r.true_pose);
    ASSERT_NEAR(rel.x, r.dead_reckoned.x, 1e-9);
    ASSERT_NEAR(rel.z, r.dead_reckoned.z, 1e-9);
    ASSERT_NEAR(angle_diff(rel.yaw, r.dead_reckoned.yaw), 0.0, 1e-9);
  }
}

#include <gtest/gtest.h>

#include "objdis/estimator.hpp"
#include "objdis/odometry.hpp"
#include "objdis/sensors.hpp"

using namespace objdis;

namespace {

TargetEstimate tracking_at(const Point3& p) { return fuse_measurement(TargetEstimate::make(), p); }

const Pose kMount = Pose::make(0.0, 0.0, 1.0, 0.0);

// A single target box in an open room, rendered from the agent's true pose.
struct World {
  Scene scene;
  CameraModel cam = CameraModel::default_camera();
  int id = 1;

  World() {
    scene.bounds = {{-10, 0, -10}, {10, 3, 10}};
    SceneObject o;
    o.id = id;
    o.box = Box::from_center({0.2, 0.9, 3.0}, {0.08, 0.08, 0.08});
    scene.objects.push_back(o);
  }
  Point3 center() const { return scene.objects[0].box.center(); }
  RenderedFrames view(const Pose& agent) const { return render(scene, compose(agent, kMount), cam); }
};

struct Rollout {
  double terminal_error = 0.0;
  bool ever_lost_tracking = false;
};

// Walks the agent toward the target over `steps` MoveAheads (after a turn to face
// it), feeding degraded masks. `rng` drives only the mask degradation.
Rollout approach(const World& w, int steps, const DegradationSpec& spec, Rng& rng) {
  Pose agent = Pose::make(0.2, -0.6, 0.0, 0.0);
  TargetEstimate est = TargetEstimate::make();
  Pose prev_dr;
  DeadReckonState dr;
  Rollout r;
  for (int t = 0; t <= steps; ++t) {
    if (t > 0) {
      agent = apply_motion(agent, {0.1, 0.0, 0.0});
      dr = dead_reckon(dr, {0.1, 0.0, 0.0});
    }
    const auto f = w.view(agent);
    const Mask m = degrade(f.instances, w.id, spec, rng);
    const bool was_tracking = est.tracking();
    est = estimate_step(est, {m, f.depth, w.cam, kMount, relative(prev_dr, dr.pose_estimate)});
    prev_dr = dr.pose_estimate;
    if (was_tracking && !est.tracking()) r.ever_lost_tracking = true;
  }
  // reference: the noiseless full-mask measurement from the final pose
  const auto f = w.view(agent);
  const Point3 truth = camera_to_agent_point(kMount, *backproject_masked_centroid(f.depth, gt_mask(f.instances, w.id), w.cam));
  r.terminal_error = est.tracking() ? distance(est.position, truth) : std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace

TEST(TargetEstimate, StartsUnobserved) {
  const TargetEstimate e = TargetEstimate::make();
  EXPECT_FALSE(e.tracking());
  EXPECT_EQ(e.observation_count, 0);
  EXPECT_THROW(TargetEstimate::make(0.0), InvalidInput);
  EXPECT_THROW(TargetEstimate::make(1.5), InvalidInput);
}

TEST(Propagate, MoveAheadShortensRange) {
  const TargetEstimate e = propagate(tracking_at({0, 0, 1.0}), apply_motion({}, {0.2, 0, 0}));
  EXPECT_NEAR(e.position.z, 0.8, 1e-12);
  EXPECT_NEAR(bearing(e.position), 0.0, 1e-12);
  EXPECT_EQ(e.steps_since_seen, 1);
  EXPECT_EQ(e.observation_count, 1);
}

TEST(Propagate, RotateRightShiftsBearingLeft) {
  const TargetEstimate e = propagate(tracking_at({0, 0, 1.0}), apply_motion({}, {0, kRotateStep, 0}));
  EXPECT_NEAR(rad_to_deg(bearing(e.position)), -45.0, 1e-9);
  EXPECT_NEAR(e.position.norm(), 1.0, 1e-12);
}

TEST(Propagate, UnobservedIsNoOpWithFlag) {
  const TargetEstimate e = propagate(TargetEstimate::make(), apply_motion({}, {0.2, 0, 0}));
  EXPECT_FALSE(e.tracking());
  EXPECT_EQ(e.unobserved_propagations, 1);
  EXPECT_EQ(e.steps_since_seen, 0);
}

TEST(Propagate, ScriptMatchesGroundTruthFrameChange) {
  Rng rng(1);
  const Point3 world{1.3, 0.7, 2.1};
  for (int trial = 0; trial < 10; ++trial) {
    Pose agent = Pose::make(uniform(rng, -1, 1), uniform(rng, -1, 1), 0.0, uniform(rng, -kPi, kPi));
    TargetEstimate e = tracking_at(transform_point(invert(agent), world));
    DeadReckonState dr;
    Pose prev;
    const BodyMotion moves[3] = {{kMoveStep, 0, 0}, {0, kRotateStep, 0}, {0, -kRotateStep, 0}};
    for (int t = 0; t < 50; ++t) {
      const BodyMotion m = moves[uniform_index(rng, 3)];
      agent = apply_motion(agent, m);
      dr = dead_reckon(dr, m);
      e = propagate(e, relative(prev, dr.pose_estimate));
      prev = dr.pose_estimate;
    }
    const Point3 truth = transform_point(invert(agent), world);
    EXPECT_NEAR(distance(e.position, truth), 0.0, 1e-9);
    EXPECT_EQ(e.steps_since_seen, 50);
  }
}

TEST(Propagate, FrameCovariance) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const Point3 p{uniform(rng, -3, 3), uniform(rng, -1, 2), uniform(rng, -3, 3)};
    const Pose g = Pose::make(uniform(rng, -1, 1), uniform(rng, -1, 1), 0.0, uniform(rng, -kPi, kPi));
    const Point3 a = propagate(tracking_at(p), g).position;
    const Point3 b = transform_point(invert(g), p);
    ASSERT_NEAR(distance(a, b), 0.0, 1e-12);
  }
}

TEST(Observe, FirstMeasurementIsTakenVerbatim) {
  const TargetEstimate e = fuse_measurement(TargetEstimate::make(), {0.3, -0.1, 1.7});
  EXPECT_TRUE(e.tracking());
  EXPECT_EQ(e.position, (Point3{0.3, -0.1, 1.7}));
  EXPECT_EQ(e.observation_count, 1);
}

TEST(Observe, HalfBlend) {
  const TargetEstimate e = fuse_measurement(tracking_at({1, 0, 1}), {0, 0, 1});
  EXPECT_NEAR(e.position.x, 0.5, 1e-15);
  EXPECT_NEAR(e.position.y, 0.0, 1e-15);
  EXPECT_NEAR(e.position.z, 1.0, 1e-15);
  EXPECT_EQ(e.observation_count, 2);
  EXPECT_EQ(e.steps_since_seen, 0);
}

TEST(Observe, RunningMeanMode) {
  TargetEstimate e = TargetEstimate::make(0.5, BlendMode::RunningMean);
  for (double x : {1.0, 2.0, 6.0}) e = fuse_measurement(e, {x, 0, 0});
  EXPECT_NEAR(e.position.x, 3.0, 1e-12);
}

TEST(Observe, EmptyMaskOnlyAges) {
  const CameraModel cam = CameraModel::default_camera();
  const TargetEstimate prior = tracking_at({0.1, 0.2, 0.3});
  const TargetEstimate e = observe(prior, Mask(cam.width, cam.height), DepthFrame(cam.width, cam.height, 5.0), cam, kMount);
  EXPECT_EQ(e.position, prior.position);
  EXPECT_EQ(e.steps_since_seen, 1);
  EXPECT_EQ(e.observation_count, 1);
  EXPECT_TRUE(e.tracking());
}

TEST(Observe, ResolutionMismatchThrows) {
  const CameraModel cam = CameraModel::default_camera();
  EXPECT_THROW(observe(TargetEstimate::make(), Mask(10, 10), DepthFrame(cam.width, cam.height, 5.0), cam, kMount),
               InvalidInput);
}

TEST(Observe, MeasurementInAgentFrame) {
  World w;
  const auto f = w.view({});
  const TargetEstimate e = observe(TargetEstimate::make(), gt_mask(f.instances, w.id), f.depth, w.cam, kMount);
  ASSERT_TRUE(e.tracking());
  // camera level with the box top: only the front face at z = 3.0 - 0.08 shows
  const double pixel = 2.92 / w.cam.fx;  // one pixel's footprint on that face
  EXPECT_NEAR(e.position.x, 0.2, pixel);
  EXPECT_NEAR(e.position.y, 0.9, pixel);
  EXPECT_NEAR(e.position.z, 2.92, 1e-9);
}

TEST(EstimateStep, ConvergesWithinThreeObservations) {
  World w;
  Pose agent = Pose::make(0.2, 1.0, 0.0, 0.0);
  TargetEstimate e = TargetEstimate::make();
  DeadReckonState dr;
  Pose prev;
  for (int t = 0; t < 3; ++t) {
    if (t > 0) {
      agent = apply_motion(agent, {0.2, 0, 0});
      dr = dead_reckon(dr, {0.2, 0, 0});
    }
    const auto f = w.view(agent);
    e = estimate_step(e, {gt_mask(f.instances, w.id), f.depth, w.cam, kMount, relative(prev, dr.pose_estimate)});
    prev = dr.pose_estimate;
  }
  // lag behind the latest noiseless measurement stays small
  const auto f = w.view(agent);
  const Point3 latest = camera_to_agent_point(kMount, *backproject_masked_centroid(f.depth, gt_mask(f.instances, w.id), w.cam));
  EXPECT_LT(distance(e.position, latest), 0.05);
  EXPECT_EQ(e.observation_count, 3);
}

TEST(EstimateStep, ZeroNoiseApproach) {
  World w;
  Rng rng(1);
  const Rollout r = approach(w, 30, {}, rng);
  EXPECT_LT(r.terminal_error, 0.05);
}

TEST(EstimateStep, SurvivesDropoutAndPartialMasks) {
  World w;
  Rng base_rng(0);
  const double full = approach(w, 30, {}, base_rng).terminal_error;
  DegradationSpec dropout;
  dropout.present_prob = 0.3;
  DegradationSpec partial;
  partial.keep_fraction = 0.1;
  double e_drop = 0.0, e_part = 0.0;
  for (int r = 0; r < 50; ++r) {
    Rng a(derive_seed(5, static_cast<std::uint64_t>(r)));
    Rng b(derive_seed(6, static_cast<std::uint64_t>(r)));
    const Rollout d = approach(w, 30, dropout, a);
    EXPECT_FALSE(d.ever_lost_tracking);
    e_drop += d.terminal_error / 50;
    e_part += approach(w, 30, partial, b).terminal_error / 50;
  }
  EXPECT_LT(e_drop, 2 * std::max(full, 0.01));
  EXPECT_LT(e_part, 2 * std::max(full, 0.01));
}

TEST(EstimateStep, NeverRevertsToUnobserved) {
  World w;
  const auto f = w.view({});
  TargetEstimate e = estimate_step(TargetEstimate::make(),
                                   {gt_mask(f.instances, w.id), f.depth, w.cam, kMount, Pose::identity()});
  ASSERT_TRUE(e.tracking());
  const Mask none(w.cam.width, w.cam.height);
  for (int t = 0; t < 1000; ++t) {
    e = estimate_step(e, {none, f.depth, w.cam, kMount, Pose::make(0.0, 0.01, 0.0, 0.02)});
    ASSERT_TRUE(e.tracking());
  }
  EXPECT_EQ(e.steps_since_seen, 1000);
}

TEST(EstimateStep, MonotoneInPresentProbUnderOdometryNoise) {
  // Noisy odometry: stale estimates drift, so fewer observations mean larger error.
  World w;
  MotionNoiseSpec motion;
  motion.multiplier = 0.5;
  double prev = -1.0;
  for (double p : {1.0, 0.7, 0.5, 0.3, 0.1}) {
    DegradationSpec spec;
    spec.present_prob = p;
    double err = 0.0;
    int n = 0;
    for (int r = 0; r < 200; ++r) {
      Rng mask_rng(derive_seed(11, static_cast<std::uint64_t>(r)));
      Rng motion_rng(derive_seed(12, static_cast<std::uint64_t>(r)));
      Pose agent = Pose::make(0.2, -0.6, 0.0, 0.0);
      TargetEstimate est = TargetEstimate::make();
      DeadReckonState dr;
      Pose prev_dr;
      for (int t = 0; t <= 15; ++t) {
        if (t > 0) {
          const BodyMotion cmd{0.1, 0, 0};
          agent = apply_motion(agent, perturb_motion(cmd, motion, motion_rng));
          dr = dead_reckon(dr, cmd);
        }
        const auto f = w.view(agent);
        est = estimate_step(est, {degrade(f.instances, w.id, spec, mask_rng), f.depth, w.cam, kMount,
                                  relative(prev_dr, dr.pose_estimate)});
        prev_dr = dr.pose_estimate;
      }
      if (!est.tracking()) continue;
      err += distance(est.position, transform_point(invert(agent), w.center()));
      ++n;
    }
    err /= n;
    EXPECT_GE(err, prev) << "present_prob " << p;
    prev = err;
  }
}

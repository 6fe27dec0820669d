// Runs one task with each policy under moderate motion noise and prints a
// per-step trace of the destination estimate against ground truth.
//
//   demo_single_episode [scene_seed] [motion_multiplier]

#include <cstdio>
#include <cstdlib>
#include <string>

#include "objdis/objdis.hpp"

using namespace objdis;

int main(int argc, char** argv) {
  const std::uint64_t scene_seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1003;
  const double mult = argc > 2 ? std::atof(argv[2]) : 0.5;

  const auto ds = generate_task_dataset({scene_seed}, {}, 1);
  if (ds.tasks.empty()) {
    std::fprintf(stderr, "no task for scene %llu\n", static_cast<unsigned long long>(scene_seed));
    return 1;
  }
  const TaskConfig& task = ds.tasks.front();
  std::printf("scene %llu: %s -> %s, motion x%.2f\n", static_cast<unsigned long long>(scene_seed),
              std::string(category_name(task.source_category)).c_str(),
              std::string(category_name(task.dest_category)).c_str(), mult);

  NoiseSpecs noise;
  noise.motion.multiplier = mult;

  for (PolicyKind kind : {PolicyKind::Estimator, PolicyKind::GtDirection, PolicyKind::MaskOnly}) {
    const EpisodeLog log = run_episode(task, {kind, {}}, noise, 42);
    const EpisodeSummary& s = log.summary;
    std::printf("\n%-13s %s after %d steps (picked up: %s, reward %.2f)\n", s.policy.c_str(), s.status.c_str(),
                s.length, s.picked_up ? "yes" : "no", s.total_reward);
    if (kind != PolicyKind::Estimator) continue;
    std::printf("   t  action          dest estimate (agent frame)    truth                 err\n");
    for (const auto& r : log.steps) {
      if (r.t % 10 != 0 && !r.picked_up_now) continue;
      if (!r.dest_est.tracking()) {
        std::printf("%4d  %-14s  %-29s  (%5.2f %5.2f %5.2f)\n", r.t, std::string(action_name(r.action)).c_str(),
                    "unobserved", r.dest_truth.x, r.dest_truth.y, r.dest_truth.z);
        continue;
      }
      const Point3& e = r.dest_est.position;
      std::printf("%4d  %-14s  (%5.2f %5.2f %5.2f)  stale %3d  (%5.2f %5.2f %5.2f)  %.3f%s\n", r.t,
                  std::string(action_name(r.action)).c_str(), e.x, e.y, e.z, r.dest_est.steps_since_seen,
                  r.dest_truth.x, r.dest_truth.y, r.dest_truth.z, distance(e, r.dest_truth),
                  r.picked_up_now ? "  pickup" : "");
    }
  }
  return 0;
}

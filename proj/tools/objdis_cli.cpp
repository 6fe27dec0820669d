// objdis: scene/dataset generation, single episodes, sweeps and reports.
//
// Relative output paths are resolved under $OBJDIS_OUTPUT_ROOT when it is set.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "objdis/objdis.hpp"

namespace fs = std::filesystem;
using namespace objdis;

namespace {

std::string output_path(const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  if (const char* root = std::getenv("OBJDIS_OUTPUT_ROOT"); root && *root) return (fs::path(root) / p).string();
  return p;
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, int count) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
  return seeds;
}

struct SweepFlags {
  std::string config;
  std::string dataset;
  std::vector<std::string> policies;
  std::vector<double> motion, depth, keep, present, confuse;
  int episodes = 0;
  std::uint64_t master_seed = 0;
  bool master_seed_set = false;
  std::string out;
  int threads = 0;
  bool no_logs = false;
  bool gzip = false;
  bool planner = false;
};

ExperimentSpec build_spec(const SweepFlags& f) {
  ExperimentSpec s = f.config.empty() ? ExperimentSpec{} : experiment_from_json(read_json_file(f.config));
  if (!f.dataset.empty()) s.dataset_path = f.dataset;
  if (!f.policies.empty()) s.policies = f.policies;
  if (!f.motion.empty()) s.motion_multipliers = f.motion;
  if (!f.depth.empty()) s.depth_severities = f.depth;
  if (!f.keep.empty()) s.keep_fractions = f.keep;
  if (!f.present.empty()) s.present_probs = f.present;
  if (!f.confuse.empty()) s.confuse_probs = f.confuse;
  if (f.episodes > 0) s.episodes_per_cell = f.episodes;
  if (f.master_seed_set) s.master_seed = f.master_seed;
  if (!f.out.empty()) s.output_dir = f.out;
  if (f.threads > 0) s.threads = f.threads;
  if (f.no_logs) s.write_logs = false;
  if (f.gzip) s.compress_logs = true;
  if (f.planner) s.policy.use_planner = true;
  if (s.dataset_path.empty()) throw InvalidInput("no dataset given (--dataset or \"dataset\" in the config)");
  s.output_dir = output_path(s.output_dir);
  s.validate();
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"object displacement benchmark with relative target estimation"};
  app.require_subcommand(1);

  // gen-scenes
  auto* gs = app.add_subcommand("gen-scenes", "generate procedural scenes as JSON");
  std::uint64_t gs_first = 0;
  int gs_count = 10;
  std::string gs_out = "scenes.json";
  gs->add_option("--first-seed", gs_first, "first scene seed");
  gs->add_option("-n,--count", gs_count, "number of scenes")->check(CLI::PositiveNumber);
  gs->add_option("-o,--out", gs_out, "output file");

  // gen-dataset
  auto* gd = app.add_subcommand("gen-dataset", "generate task configurations");
  std::uint64_t gd_first = 0;
  int gd_count = 40;
  int gd_pairs = 5;
  std::string gd_out = "dataset.jsonl";
  gd->add_option("--first-seed", gd_first, "first scene seed");
  gd->add_option("-n,--scenes", gd_count, "number of scenes")->check(CLI::PositiveNumber);
  gd->add_option("--pairs", gd_pairs, "task pairs per scene")->check(CLI::PositiveNumber);
  gd->add_option("-o,--out", gd_out, "output file");

  // run
  auto* run = app.add_subcommand("run", "run one episode and write its log");
  std::string run_dataset;
  int run_task = 0;
  std::string run_policy = "estimator";
  std::uint64_t run_seed = 0;
  double run_motion = 0.0, run_depth = 0.0, run_keep = 1.0, run_present = 1.0, run_confuse = 0.0;
  std::string run_log;
  bool run_planner = false;
  run->add_option("--dataset", run_dataset, "dataset file")->required();
  run->add_option("--task", run_task, "task index")->check(CLI::NonNegativeNumber);
  run->add_option("--policy", run_policy, "estimator | gt_direction | mask_only");
  run->add_option("--seed", run_seed, "episode seed");
  run->add_option("--motion", run_motion, "motion noise multiplier");
  run->add_option("--depth", run_depth, "depth noise severity");
  run->add_option("--keep", run_keep, "mask keep fraction");
  run->add_option("--present", run_present, "mask present probability");
  run->add_option("--confuse", run_confuse, "mask confusion probability");
  run->add_option("--log", run_log, "write the JSON-lines log here");
  run->add_flag("--planner", run_planner, "navigate with the map planner");

  // sweep
  auto* sw = app.add_subcommand("sweep", "run an experiment grid");
  SweepFlags sf;
  sw->add_option("--config", sf.config, "experiment config JSON");
  sw->add_option("--dataset", sf.dataset, "dataset file");
  sw->add_option("--policies", sf.policies, "policy ids")->delimiter(',');
  sw->add_option("--motion", sf.motion, "motion multipliers")->delimiter(',');
  sw->add_option("--depth", sf.depth, "depth severities")->delimiter(',');
  sw->add_option("--keep", sf.keep, "keep fractions")->delimiter(',');
  sw->add_option("--present", sf.present, "present probabilities")->delimiter(',');
  sw->add_option("--confuse", sf.confuse, "confusion probabilities")->delimiter(',');
  sw->add_option("--episodes", sf.episodes, "episodes per cell");
  sw->add_option("--master-seed", sf.master_seed, "master seed")->each([&](const std::string&) {
    sf.master_seed_set = true;
  });
  sw->add_option("-o,--out", sf.out, "output directory");
  sw->add_option("-j,--threads", sf.threads, "worker threads");
  sw->add_flag("--no-logs", sf.no_logs, "skip per-step logs");
  sw->add_flag("--gzip", sf.gzip, "gzip the per-step logs");
  sw->add_flag("--planner", sf.planner, "navigate with the map planner");
  bool sw_report = false;
  sw->add_flag("--report", sw_report, "also emit the report into the output directory");

  // report
  auto* rep = app.add_subcommand("report", "curves and summary from a sweep's episodes.csv");
  std::string rep_in;
  std::string rep_out;
  rep->add_option("--in", rep_in, "sweep output directory or episodes.csv")->required();
  rep->add_option("-o,--out", rep_out, "report directory (default: the input directory)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gs) {
      const std::string out = output_path(gs_out);
      Json scenes = Json::array();
      int failed = 0;
      for (auto seed : seed_range(gs_first, gs_count)) {
        try {
          scenes.push_back(generate_scene(seed, {}));
        } catch (const GenerationError& e) {
          std::cerr << "warning: " << e.what() << "\n";
          ++failed;
        }
      }
      ensure_parent(out);
      write_text_file(out, Json{{"schema_version", kSchemaVersion}, {"scenes", scenes}}.dump(1) + "\n");
      std::cout << "wrote " << scenes.size() << " scenes to " << out << (failed ? " (some seeds failed)" : "")
                << "\n";
    } else if (*gd) {
      const std::string out = output_path(gd_out);
      const auto ds = generate_task_dataset(seed_range(gd_first, gd_count), {}, gd_pairs);
      for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";
      ensure_parent(out);
      write_text_file(out, dataset_jsonl(ds.tasks));
      std::cout << "wrote " << ds.tasks.size() << " tasks to " << out << "\n";
    } else if (*run) {
      const auto tasks = load_dataset(run_dataset);
      if (run_task >= static_cast<int>(tasks.size()))
        throw InvalidInput("--task " + std::to_string(run_task) + " out of range (dataset has " +
                           std::to_string(tasks.size()) + " tasks)");
      const auto kind = parse_policy(run_policy);
      if (!kind) throw InvalidInput("--policy: unknown policy '" + run_policy + "'");
      NoiseSpecs noise;
      noise.motion.multiplier = run_motion;
      noise.depth = DepthNoiseSpec::kinect_like().scaled(run_depth);
      noise.source_mask = {run_keep, run_present, run_confuse, 0};
      noise.dest_mask = {run_keep, run_present, run_confuse, 1};
      PolicyConfig pc;
      pc.use_planner = run_planner;
      const auto log = run_episode(tasks[static_cast<std::size_t>(run_task)], {*kind, pc}, noise, run_seed);
      std::cout << summary_json(log.summary).dump() << "\n";
      if (!run_log.empty()) {
        const std::string out = output_path(run_log);
        ensure_parent(out);
        write_text_file(out, log_jsonl(log));
      }
    } else if (*sw) {
      const ExperimentSpec spec = build_spec(sf);
      const auto tasks = load_dataset(spec.dataset_path);
      const auto t0 = std::chrono::steady_clock::now();
      const auto result = run_experiment(spec, tasks);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_experiment(spec, result);
      write_text_file((fs::path(spec.output_dir) / "experiment.json").string(),
                      experiment_to_json(spec).dump(1) + "\n");
      std::cout << results_csv(result);
      std::size_t episodes = 0;
      int failures = 0;
      for (const auto& c : result.cells) {
        episodes += c.episodes.size();
        failures += c.failures;
      }
      std::cerr << episodes << " episodes in " << secs << " s";
      if (failures) std::cerr << ", " << failures << " failed";
      std::cerr << "\n";
      if (sw_report) emit_report(result, spec.output_dir);
    } else if (*rep) {
      fs::path in = rep_in;
      if (fs::is_directory(in)) in /= "episodes.csv";
      const auto result = load_episodes_csv(in.string());
      const std::string out = output_path(rep_out.empty() ? in.parent_path().string() : rep_out);
      std::cout << emit_report(result, out.empty() ? "." : out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

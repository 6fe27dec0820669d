#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "objdis/harness.hpp"

using namespace objdis;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("objdis_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<TaskConfig>& small_dataset() {
  static const std::vector<TaskConfig> tasks = generate_task_dataset({3001, 3002, 3003}, {}, 1).tasks;
  return tasks;
}

ExperimentSpec quick_spec(const fs::path& out) {
  ExperimentSpec s;
  s.episodes_per_cell = 1;
  s.write_logs = false;
  s.output_dir = out.string();
  return s;
}

SceneObject cube(int id, Category c, const Point3& center, double half) {
  SceneObject o;
  o.id = id;
  o.category = c;
  o.box = Box::from_center(center, {half, half, half});
  return o;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(RunEpisode, AdjacentTaskSucceeds) {
  TaskScene t;
  t.scene.bounds = {{0, 0, 0}, {4, 2.5, 4}};
  t.scene.statics.push_back({{1.5, 0, 2.3}, {2.6, 0.7, 2.8}});  // a low table right in front
  t.scene.objects.push_back(cube(1, Category::Apple, {2.0, 0.74, 2.45}, 0.04));
  t.scene.objects.push_back(cube(2, Category::Pot, {2.3, 0.78, 2.5}, 0.08));
  t.source_id = 1;
  t.dest_id = 2;
  const EpisodeLog log = run_episode(t, Pose::make(2.0, 2.0, 0.0, 0.0), {PolicyKind::Estimator, {}}, {}, 1);
  EXPECT_TRUE(log.summary.success) << log.summary.status;
  EXPECT_LT(log.summary.length, 200);
  EXPECT_TRUE(log.summary.picked_up);
}

TEST(RunEpisode, WalledOffSourceTimesOut) {
  TaskScene t;
  t.scene.bounds = {{0, 0, 0}, {4, 2.5, 4}};
  // floor-to-ceiling cage around the source
  t.scene.statics.push_back({{0.0, 0, 2.9}, {1.2, 2.5, 3.0}});
  t.scene.statics.push_back({{1.1, 0, 2.9}, {1.2, 2.5, 4.0}});
  t.scene.objects.push_back(cube(1, Category::Apple, {0.5, 0.5, 3.5}, 0.04));
  t.scene.objects.push_back(cube(2, Category::Pot, {3.0, 0.5, 1.0}, 0.08));
  t.source_id = 1;
  t.dest_id = 2;
  const EpisodeLog log = run_episode(t, Pose::make(2.0, 1.6, 0.0, 0.0), {PolicyKind::Estimator, {}}, {}, 1);
  EXPECT_EQ(log.summary.status, "timeout");
  EXPECT_EQ(log.summary.length, 200);
  EXPECT_FALSE(log.summary.picked_up);
}

TEST(RunEpisode, SameInputsSameHash) {
  const auto& ds = small_dataset();
  NoiseSpecs n;
  n.motion.multiplier = 0.5;
  EXPECT_EQ(log_hash(run_episode(ds[0], {PolicyKind::MaskOnly, {}}, n, 5)),
            log_hash(run_episode(ds[0], {PolicyKind::MaskOnly, {}}, n, 5)));
}

TEST(RunEpisode, InvalidConfigNamesField) {
  TaskConfig bad = small_dataset()[0];
  bad.dest_placement = -4;
  try {
    run_episode(bad, {PolicyKind::Estimator, {}}, {}, 1);
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("dest_placement"), std::string::npos) << e.what();
  }
}

TEST(RunEpisode, ReplayScriptReproducesActions) {
  const auto& ds = small_dataset();
  const EpisodeLog a = run_episode(ds[1], {PolicyKind::Estimator, {}}, {}, 2);
  const auto script = actions_of(a);
  RunOptions opts;
  opts.script = &script;
  const EpisodeLog b = run_episode(ds[1], {PolicyKind::Estimator, {}}, {}, 2, {}, {}, opts);
  EXPECT_EQ(log_jsonl(a), log_jsonl(b));
}

TEST(Experiment, OneCellOneRow) {
  const auto out = scratch("one");
  const auto r = run_experiment(quick_spec(out), small_dataset());
  ASSERT_EQ(r.cells.size(), 1u);
  const auto rows = lines(results_csv(r));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], kResultsHeader);
  EXPECT_EQ(split_csv_line(rows[1]).size(), 14u);
  EXPECT_EQ(split_csv_line(rows[1])[6], "1");
}

TEST(Experiment, GridProduct) {
  ExperimentSpec s = quick_spec(scratch("grid"));
  s.motion_multipliers = {0.0, 0.5, 1.0};
  const auto r = run_experiment(s, small_dataset());
  EXPECT_EQ(lines(results_csv(r)).size(), 4u);
  s.policies = {"estimator", "gt_direction"};
  s.keep_fractions = {1.0, 0.5};
  EXPECT_EQ(expand_grid(s).size(), 12u);
}

TEST(Experiment, RerunIsByteIdentical) {
  ExperimentSpec s;
  s.policies = {"estimator", "mask_only"};
  s.motion_multipliers = {0.0, 1.0};
  s.episodes_per_cell = 2;
  s.master_seed = 17;
  s.compress_logs = true;
  for (const char* name : {"rerun_a", "rerun_b"}) {
    s.output_dir = scratch(name).string();
    write_experiment(s, run_experiment(s, small_dataset()));
  }
  for (const char* f : {"results.csv", "episodes.csv", "log_hashes.csv"})
    EXPECT_EQ(slurp(scratch("x").parent_path() / "objdis_test_rerun_a" / f),
              slurp(scratch("x").parent_path() / "objdis_test_rerun_b" / f))
        << f;
  const fs::path log = fs::temp_directory_path() / "objdis_test_rerun_a" / "logs" /
                       (Cell{"estimator", 1.0, 0.0, 1.0, 1.0, 0.0}.key() + ".jsonl.gz");
  ASSERT_TRUE(fs::exists(log));
  EXPECT_EQ(slurp(log), slurp(fs::temp_directory_path() / "objdis_test_rerun_b" / "logs" / log.filename()));
}

TEST(Experiment, ThreadsDoNotChangeResults) {
  ExperimentSpec s = quick_spec(scratch("threads"));
  s.motion_multipliers = {0.0, 1.0};
  s.episodes_per_cell = 2;
  s.write_logs = true;
  s.output_dir.clear();
  const auto one = run_experiment(s, small_dataset());
  s.threads = 3;
  const auto three = run_experiment(s, small_dataset());
  EXPECT_EQ(episodes_csv(one), episodes_csv(three));
  EXPECT_EQ(log_hashes_csv(one), log_hashes_csv(three));
}

TEST(Experiment, AddingCellsKeepsExistingOnes) {
  ExperimentSpec s = quick_spec(scratch("add"));
  s.episodes_per_cell = 2;
  s.motion_multipliers = {0.5};
  const auto before = run_experiment(s, small_dataset());
  s.motion_multipliers = {0.0, 0.5};
  const auto after = run_experiment(s, small_dataset());
  ASSERT_EQ(after.cells.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(before.cells[0].episodes[i].seed, after.cells[1].episodes[i].seed);
    EXPECT_EQ(before.cells[0].episodes[i].summary.length, after.cells[1].episodes[i].summary.length);
  }
}

TEST(Experiment, ValidatesSpec) {
  ExperimentSpec s;
  s.motion_multipliers.clear();
  EXPECT_THROW(s.validate(), InvalidInput);
  s = {};
  s.episodes_per_cell = 0;
  EXPECT_THROW(s.validate(), InvalidInput);
  s = {};
  s.policies = {"oracle"};
  EXPECT_THROW(s.validate(), InvalidInput);
  s = {};
  s.present_probs = {1.2};
  EXPECT_THROW(s.validate(), InvalidInput);
  EXPECT_THROW(run_experiment(ExperimentSpec{}, {}), InvalidInput);
}

TEST(Experiment, EpisodesCsvRoundTrip) {
  ExperimentSpec s = quick_spec(scratch("csv"));
  s.motion_multipliers = {0.0, 1.0};
  s.episodes_per_cell = 2;
  const auto r = run_experiment(s, small_dataset());
  write_experiment(s, r);
  const auto back = load_episodes_csv((fs::path(s.output_dir) / "episodes.csv").string());
  EXPECT_EQ(results_csv(back), results_csv(r));
}

TEST(Report, KeepFractionCurveHasMonotoneX) {
  ExperimentSpec s = quick_spec(scratch("curve"));
  s.keep_fractions = {1.0, 0.05, 0.3};
  const auto r = run_experiment(s, small_dataset());
  emit_report(r, s.output_dir);
  const auto rows = lines(slurp(fs::path(s.output_dir) / "curve_keep_fraction.csv"));
  ASSERT_GT(rows.size(), 1u);
  EXPECT_EQ(rows[0], "policy,x,metric,mean,stderr,n");
  double prev = -1.0;
  std::set<double> xs;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double x = std::stod(split_csv_line(rows[i])[1]);
    EXPECT_GE(x, prev);
    prev = x;
    xs.insert(x);
  }
  EXPECT_EQ(xs.size(), 3u);
  EXPECT_FALSE(fs::exists(fs::path(s.output_dir) / "curve_motion_mult.csv"));
}

TEST(Report, EmptyResultsIsAnError) {
  EXPECT_THROW(emit_report(ExperimentResult{}, scratch("empty").string()), InvalidInput);
}

TEST(Report, StderrMatchesBootstrap) {
  Rng rng(21);
  ExperimentResult r;
  CellResult c;
  c.cell = {"estimator", 0.0, 0.0, 1.0, 1.0, 0.0};
  for (int i = 0; i < 300; ++i) {
    EpisodeRow e;
    e.summary.picked_up = bernoulli(rng, 0.6);
    e.summary.success = e.summary.picked_up && bernoulli(rng, 0.6);
    e.summary.length = 20 + uniform_index(rng, 180);
    e.summary.terminal_dest_error = std::abs(gaussian(rng, 0.1));
    c.episodes.push_back(e);
  }
  r.cells.push_back(c);
  const auto pts = curve(r, "motion_mult");

  // bootstrap the mean of each metric over resampled episode sets
  auto boot = [&](auto get) {
    Rng b(99);
    const int n = static_cast<int>(c.episodes.size());
    std::vector<double> means;
    for (int rep = 0; rep < 4000; ++rep) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += get(c.episodes[uniform_index(b, n)].summary);
      means.push_back(s / n);
    }
    double m = 0.0;
    for (double x : means) m += x;
    m /= means.size();
    double v = 0.0;
    for (double x : means) v += (x - m) * (x - m);
    return std::sqrt(v / (means.size() - 1));
  };
  std::map<std::string, double> expected{
      {"PU", boot([](const EpisodeSummary& e) { return e.picked_up ? 1.0 : 0.0; })},
      {"SR", boot([](const EpisodeSummary& e) { return e.success ? 1.0 : 0.0; })},
      {"eplen", boot([](const EpisodeSummary& e) { return static_cast<double>(e.length); })},
      {"terminal_est_error", boot([](const EpisodeSummary& e) { return e.terminal_dest_error; })},
  };
  for (const auto& p : pts) {
    if (!expected.count(p.metric)) continue;
    EXPECT_NEAR(p.stderr_ / expected[p.metric], 1.0, 0.05) << p.metric;
  }
}

TEST(Logs, GzipRoundTrip) {
  const auto dir = scratch("gz");
  fs::create_directories(dir);
  const EpisodeLog log = run_episode(small_dataset()[0], {PolicyKind::Estimator, {}}, {}, 3);
  const std::string text = log_jsonl(log);
  const std::string path = (dir / "e.jsonl.gz").string();
  write_gzip_file(path, text);
  EXPECT_EQ(read_gzip_file(path), text);
  EXPECT_LT(fs::file_size(path), text.size());
  // each record is one JSON object with the documented fields
  const auto first = Json::parse(lines(text).at(1));
  for (const char* k : {"t", "action", "reward", "true_pose", "dead_reckoned", "source_est", "dest_est"})
    EXPECT_TRUE(first.contains(k)) << k;
}

TEST(Config, RoundTripAndUnknownKey) {
  ExperimentSpec s;
  s.policies = {"mask_only"};
  s.present_probs = {1.0, 0.3};
  s.master_seed = 12345;
  s.compress_logs = true;
  s.policy.use_planner = true;
  const ExperimentSpec back = experiment_from_json(experiment_to_json(s));
  EXPECT_EQ(experiment_to_json(back), experiment_to_json(s));

  Json j = experiment_to_json(s);
  j["episodes"] = 3;
  try {
    experiment_from_json(j);
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("episodes"), std::string::npos);
  }
  j = experiment_to_json(s);
  j.erase("schema_version");
  EXPECT_THROW(experiment_from_json(j), InvalidInput);
}

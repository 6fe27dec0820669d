#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "objdis/error.hpp"
#include "objdis/policies.hpp"
#include "objdis/random.hpp"
#include "objdis/scene.hpp"
#include "objdis/sensors.hpp"
#include "objdis/serialization.hpp"
#include "objdis/task.hpp"

namespace objdis {

struct PolicySpec {
  PolicyKind kind = PolicyKind::Estimator;
  PolicyConfig config;
};

struct RunOptions {
  bool record_steps = true;
  /// Replay these actions instead of consulting the policy. The episode ends
  /// when the script runs out (status stays "running") or the task ends.
  const std::vector<Action>* script = nullptr;
};

namespace detail {

inline StepRecord make_record(const EpisodeState& s, const StepEvents& ev, const RewardLedger& r) {
  StepRecord rec;
  rec.t = s.step;
  rec.action = ev.action;
  rec.action_failed = ev.action_failed;
  rec.picked_up_now = ev.picked_up_now;
  rec.disturbed_now = ev.disturbed_now;
  rec.new_state = ev.new_state;
  rec.source_first_seen = ev.source_first_seen;
  rec.dest_first_seen = ev.dest_first_seen;
  rec.source_visible = ev.source_visible;
  rec.dest_visible = ev.dest_visible;
  rec.reward = r;
  rec.true_pose = s.true_pose;
  rec.dead_reckoned = s.dead_reckoning.pose_estimate;
  rec.source_est = s.source_est;
  rec.dest_est = s.dest_est;
  rec.source_truth = s.to_agent(s.source().box.center());
  rec.dest_truth = s.to_agent(s.dest().box.center());
  return rec;
}

}  // namespace detail

/// Runs one episode of `task` from `start` until success, timeout, or the end
/// of a replay script.
inline EpisodeLog run_episode(const TaskScene& task, const Pose& start, const PolicySpec& policy,
                              const NoiseSpecs& specs, std::uint64_t seed, const EnvConfig& env = {},
                              const RunOptions& opts = {}) {
  EpisodeRng rng = EpisodeRng::from_seed(seed);
  auto [state, obs] = make_episode(task, start, env, specs, rng);

  PolicyContext ctx;
  ctx.camera = env.camera;
  ctx.camera_mount = env.camera_mount;
  ctx.body = env.body;
  ctx.arm = env.arm;
  ctx.source_size = state.source().box.size();
  ctx.dest_size = state.dest().box.size();
  ctx.planner_map = &task.scene;
  ctx.planner_start = start;

  const Pose to_start = invert(start);
  const GtTargets gt{transform_point(to_start, state.source().box.center()),
                     transform_point(to_start, state.dest().box.center())};

  EpisodeLog log;
  log.summary.policy = std::string(policy_name(policy.kind));
  PolicyState pst;
  pst.scan_budget = policy.config.scan_steps;
  std::size_t cursor = 0;

  while (state.done == EpisodeStatus::Running) {
    Action a;
    if (opts.script) {
      if (cursor >= opts.script->size()) break;
      a = (*opts.script)[cursor++];
    } else {
      switch (policy.kind) {
        case PolicyKind::Estimator:
          a = estimator_policy(obs, state.source_est, state.dest_est, pst, policy.config, ctx);
          break;
        case PolicyKind::GtDirection:
          a = gt_direction_policy(obs, gt, pst, policy.config, ctx, relative(start, state.true_pose));
          break;
        case PolicyKind::MaskOnly:
          a = mask_only_policy(obs, pst, policy.config, ctx);
          break;
      }
    }
    StepResult r = step(state, a, specs, rng);
    EpisodeSummary& sum = log.summary;
    sum.total_reward += r.reward.total;
    sum.source_visible_frames += r.events.source_visible;
    sum.dest_visible_frames += r.events.dest_visible;
    if (opts.record_steps) log.steps.push_back(detail::make_record(state, r.events, r.reward));
    obs = std::move(r.observation);
  }

  EpisodeSummary& sum = log.summary;
  sum.picked_up = state.picked_up;
  sum.success = state.done == EpisodeStatus::Success;
  sum.disturbed = state.disturbed;
  sum.length = state.step;
  sum.frames = state.step;
  sum.terminal_dest_error = dest_estimate_error(state);
  sum.status = std::string(status_name(state.done));
  return log;
}

/// Builds the task from its configuration and runs it.
inline EpisodeLog run_episode(const TaskConfig& cfg, const PolicySpec& policy, const NoiseSpecs& specs,
                              std::uint64_t seed, const EnvConfig& env = {}, const SceneParams& params = {},
                              const RunOptions& opts = {}) {
  const Scene base = generate_scene(cfg.scene_seed, params);
  const TaskScene task = instantiate_task(base, cfg, params, env.body);
  return run_episode(task, cfg.agent_start, policy, specs, seed, env, opts);
}

inline std::vector<Action> actions_of(const EpisodeLog& log) {
  std::vector<Action> out;
  out.reserve(log.steps.size());
  for (const auto& s : log.steps) out.push_back(s.action);
  return out;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct ExperimentSpec {
  std::string dataset_path;
  std::vector<std::string> policies{"estimator"};
  std::vector<double> motion_multipliers{0.0};
  std::vector<double> depth_severities{0.0};
  std::vector<double> keep_fractions{1.0};
  std::vector<double> present_probs{1.0};
  std::vector<double> confuse_probs{0.0};
  int episodes_per_cell = 10;
  std::uint64_t master_seed = 0;
  std::string output_dir = "out";
  bool write_logs = true;
  bool compress_logs = false;  // logs/<cell>.jsonl.gz instead of .jsonl
  int threads = 1;

  EnvConfig env;
  PolicyConfig policy;
  SceneParams scene;
  MotionNoiseSpec motion;                            // multiplier is overridden per cell
  DepthNoiseSpec depth = DepthNoiseSpec::kinect_like();  // scaled per cell

  void validate() const {
    auto nonempty = [](const auto& v, const char* name) {
      if (v.empty()) throw InvalidInput(std::string(name) + " must not be empty");
    };
    nonempty(policies, "policies");
    nonempty(motion_multipliers, "motion_multipliers");
    nonempty(depth_severities, "depth_severities");
    nonempty(keep_fractions, "keep_fractions");
    nonempty(present_probs, "present_probs");
    nonempty(confuse_probs, "confuse_probs");
    if (episodes_per_cell < 1) throw InvalidInput("episodes_per_cell must be >= 1");
    if (threads < 1) throw InvalidInput("threads must be >= 1");
    for (const auto& p : policies)
      if (!parse_policy(p)) throw InvalidInput("policies: unknown policy '" + p + "'");
    for (double m : motion_multipliers)
      if (!(m >= 0.0)) throw InvalidInput("motion_multipliers must be >= 0");
    for (double d : depth_severities)
      if (!(d >= 0.0)) throw InvalidInput("depth_severities must be >= 0");
    auto unit = [](const std::vector<double>& v, const char* name) {
      for (double x : v)
        if (!(x >= 0.0 && x <= 1.0)) throw InvalidInput(std::string(name) + " must lie in [0, 1]");
    };
    unit(keep_fractions, "keep_fractions");
    unit(present_probs, "present_probs");
    unit(confuse_probs, "confuse_probs");
  }
};

inline std::string fmt6(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// 17 significant digits: parses back to the same double.
inline std::string fmt_exact(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Cell {
  std::string policy;
  double motion_mult = 0.0;
  double depth_severity = 0.0;
  double keep_fraction = 1.0;
  double present_prob = 1.0;
  double confuse_prob = 0.0;

  std::string key() const {
    return policy + "_m" + fmt6(motion_mult) + "_d" + fmt6(depth_severity) + "_k" + fmt6(keep_fraction) + "_p" +
           fmt6(present_prob) + "_c" + fmt6(confuse_prob);
  }
};

/// Grid product in a fixed order: policy, motion, depth, keep, present, confuse.
inline std::vector<Cell> expand_grid(const ExperimentSpec& spec) {
  std::vector<Cell> cells;
  for (const auto& p : spec.policies)
    for (double m : spec.motion_multipliers)
      for (double d : spec.depth_severities)
        for (double k : spec.keep_fractions)
          for (double pr : spec.present_probs)
            for (double c : spec.confuse_probs) cells.push_back({p, m, d, k, pr, c});
  return cells;
}

inline std::uint64_t cell_seed(std::uint64_t master, const Cell& cell) { return derive_seed(master, cell.key()); }

inline std::uint64_t episode_seed(std::uint64_t master, const Cell& cell, int index) {
  return derive_seed(cell_seed(master, cell), static_cast<std::uint64_t>(index));
}

inline NoiseSpecs cell_noise(const ExperimentSpec& spec, const Cell& cell) {
  NoiseSpecs n;
  n.motion = spec.motion;
  n.motion.multiplier = cell.motion_mult;
  n.depth = spec.depth.scaled(cell.depth_severity);
  n.source_mask = {cell.keep_fraction, cell.present_prob, cell.confuse_prob, 0};
  n.dest_mask = {cell.keep_fraction, cell.present_prob, cell.confuse_prob, 1};
  return n;
}

struct EpisodeRow {
  int index = 0;
  std::uint64_t seed = 0;
  EpisodeSummary summary;
  std::string error;  // non-empty when the episode could not run
};

struct CellResult {
  Cell cell;
  Metrics metrics;
  std::vector<EpisodeRow> episodes;
  std::uint64_t log_hash = 0;
  int failures = 0;
};

struct ExperimentResult {
  std::vector<CellResult> cells;
};

inline Metrics cell_metrics(const std::vector<EpisodeRow>& rows) {
  std::vector<EpisodeSummary> ok;
  for (const auto& r : rows)
    if (r.error.empty()) ok.push_back(r.summary);
  if (ok.empty()) {
    Metrics m;
    m.pu = m.sr = m.srwd = m.mean_eplen = m.src_visibility = m.dst_visibility =
        std::numeric_limits<double>::quiet_NaN();
    return m;
  }
  return compute_metrics(std::span<const EpisodeSummary>(ok));
}

/// Runs every (cell, index) pair, optionally on several threads. Results are
/// stored by position, so the output never depends on completion order.
inline ExperimentResult run_experiment(const ExperimentSpec& spec, const std::vector<TaskConfig>& dataset) {
  spec.validate();
  if (dataset.empty()) throw InvalidInput("dataset has no tasks");

  std::map<std::uint64_t, Scene> scenes;
  for (const auto& t : dataset)
    if (!scenes.count(t.scene_seed)) scenes.emplace(t.scene_seed, generate_scene(t.scene_seed, spec.scene));

  const auto cells = expand_grid(spec);
  const int per = spec.episodes_per_cell;
  const std::size_t total = cells.size() * static_cast<std::size_t>(per);
  std::vector<EpisodeRow> rows(total);
  std::vector<std::string> logs(spec.write_logs ? total : 0);

  auto run_job = [&](std::size_t job) {
    const Cell& cell = cells[job / per];
    const int index = static_cast<int>(job % per);
    EpisodeRow& row = rows[job];
    row.index = index;
    row.seed = episode_seed(spec.master_seed, cell, index);
    const std::size_t ti = static_cast<std::size_t>(index) % dataset.size();
    row.summary.task_index = static_cast<int>(ti);
    row.summary.policy = cell.policy;
    try {
      const TaskConfig& cfg = dataset[ti];
      const TaskScene task = instantiate_task(scenes.at(cfg.scene_seed), cfg, spec.scene, spec.env.body);
      RunOptions opts;
      opts.record_steps = spec.write_logs;
      EpisodeLog log = run_episode(task, cfg.agent_start, {*parse_policy(cell.policy), spec.policy},
                                   cell_noise(spec, cell), row.seed, spec.env, opts);
      log.summary.task_index = static_cast<int>(ti);
      row.summary = log.summary;
      if (spec.write_logs) logs[job] = log_jsonl(log);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  };

  if (spec.threads == 1) {
    for (std::size_t j = 0; j < total; ++j) run_job(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < spec.threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < total; j = next++) run_job(j);
      });
    for (auto& th : pool) th.join();
  }

  ExperimentResult out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellResult cr;
    cr.cell = cells[c];
    std::uint64_t h = fnv1a64("");
    for (int i = 0; i < per; ++i) {
      const std::size_t j = c * per + i;
      cr.episodes.push_back(rows[j]);
      if (!rows[j].error.empty()) ++cr.failures;
      if (spec.write_logs) h = fnv1a64(logs[j], h);
    }
    cr.metrics = cell_metrics(cr.episodes);
    cr.log_hash = spec.write_logs ? h : 0;
    out.cells.push_back(std::move(cr));
  }

  if (!spec.output_dir.empty() && spec.write_logs) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(spec.output_dir) / "logs");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::string text;
      for (int i = 0; i < per; ++i) text += logs[c * per + i];
      const fs::path base = fs::path(spec.output_dir) / "logs" / cells[c].key();
      if (spec.compress_logs)
        write_gzip_file(base.string() + ".jsonl.gz", text);
      else
        write_text_file(base.string() + ".jsonl", text);
    }
  }
  return out;
}

inline constexpr const char* kResultsHeader =
    "policy,motion_mult,depth_severity,keep_fraction,present_prob,confuse_prob,N,PU,SR,SRwD,mean_eplen,"
    "src_visibility,dst_visibility,mean_terminal_est_error";

inline constexpr const char* kEpisodesHeader =
    "policy,motion_mult,depth_severity,keep_fraction,present_prob,confuse_prob,index,seed,task_index,picked_up,"
    "success,disturbed,length,source_visible_frames,dest_visible_frames,terminal_dest_error,total_reward,status,"
    "error";

inline std::string cell_prefix(const Cell& c) {
  return c.policy + "," + fmt6(c.motion_mult) + "," + fmt6(c.depth_severity) + "," + fmt6(c.keep_fraction) + "," +
         fmt6(c.present_prob) + "," + fmt6(c.confuse_prob);
}

inline std::string results_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << kResultsHeader << '\n';
  for (const auto& c : r.cells) {
    const Metrics& m = c.metrics;
    os << cell_prefix(c.cell) << ',' << m.n << ',' << fmt6(m.pu) << ',' << fmt6(m.sr) << ',' << fmt6(m.srwd) << ','
       << fmt6(m.mean_eplen) << ',' << fmt6(m.src_visibility) << ',' << fmt6(m.dst_visibility) << ','
       << fmt6(m.mean_terminal_est_error) << '\n';
  }
  return os.str();
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

inline std::string episodes_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << kEpisodesHeader << '\n';
  for (const auto& c : r.cells) {
    for (const auto& e : c.episodes) {
      const EpisodeSummary& s = e.summary;
      os << cell_prefix(c.cell) << ',' << e.index << ',' << e.seed << ',' << s.task_index << ',' << s.picked_up
         << ',' << s.success << ',' << s.disturbed << ',' << s.length << ',' << s.source_visible_frames << ','
         << s.dest_visible_frames << ',' << fmt_exact(s.terminal_dest_error) << ',' << fmt_exact(s.total_reward) << ','
         << (e.error.empty() ? s.status : "error") << ',' << csv_escape(e.error) << '\n';
    }
  }
  return os.str();
}

inline std::string log_hashes_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << "cell,log_hash\n";
  char buf[32];
  for (const auto& c : r.cells) {
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(c.log_hash));
    os << c.cell.key() << ',' << buf << '\n';
  }
  return os.str();
}

/// results.csv, episodes.csv and log_hashes.csv under spec.output_dir.
inline void write_experiment(const ExperimentSpec& spec, const ExperimentResult& r) {
  namespace fs = std::filesystem;
  fs::create_directories(spec.output_dir);
  write_text_file((fs::path(spec.output_dir) / "results.csv").string(), results_csv(r));
  write_text_file((fs::path(spec.output_dir) / "episodes.csv").string(), episodes_csv(r));
  write_text_file((fs::path(spec.output_dir) / "log_hashes.csv").string(), log_hashes_csv(r));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

/// Reads an episodes.csv back into per-cell results (metrics recomputed).
inline ExperimentResult load_episodes_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kEpisodesHeader) throw InvalidInput(path + ": unexpected header");
  ExperimentResult r;
  std::map<std::string, std::size_t> where;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 19) throw InvalidInput(path + ":" + std::to_string(lineno) + ": expected 19 fields");
    try {
      Cell c{f[0], std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), std::stod(f[4]), std::stod(f[5])};
      EpisodeRow e;
      e.index = std::stoi(f[6]);
      e.seed = std::stoull(f[7]);
      e.summary.policy = c.policy;
      e.summary.task_index = std::stoi(f[8]);
      e.summary.picked_up = f[9] == "1";
      e.summary.success = f[10] == "1";
      e.summary.disturbed = f[11] == "1";
      e.summary.length = e.summary.frames = std::stoi(f[12]);
      e.summary.source_visible_frames = std::stoi(f[13]);
      e.summary.dest_visible_frames = std::stoi(f[14]);
      e.summary.terminal_dest_error = f[15] == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[15]);
      e.summary.total_reward = std::stod(f[16]);
      e.summary.status = f[17];
      e.error = f[18];
      if (f[17] == "error" && e.error.empty()) e.error = "error";
      const std::string key = c.key();
      if (!where.count(key)) {
        where[key] = r.cells.size();
        r.cells.push_back({c, {}, {}, 0, 0});
      }
      CellResult& cr = r.cells[where[key]];
      if (!e.error.empty()) ++cr.failures;
      cr.episodes.push_back(std::move(e));
    } catch (const std::logic_error&) {
      throw InvalidInput(path + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  for (auto& c : r.cells) c.metrics = cell_metrics(c.episodes);
  return r;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct CurvePoint {
  std::string policy;
  double x = 0.0;
  std::string metric;
  double mean = 0.0;
  double stderr_ = 0.0;
  int n = 0;
};

inline double binomial_se(double p, int n) { return n > 0 ? std::sqrt(p * (1.0 - p) / n) : 0.0; }

inline double sample_se(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

inline double axis_value(const Cell& c, const std::string& axis) {
  if (axis == "motion_mult") return c.motion_mult;
  if (axis == "depth_severity") return c.depth_severity;
  if (axis == "keep_fraction") return c.keep_fraction;
  if (axis == "present_prob") return c.present_prob;
  if (axis == "confuse_prob") return c.confuse_prob;
  throw InvalidInput("unknown axis " + axis);
}

inline const std::vector<std::string>& swept_axis_names() {
  static const std::vector<std::string> names{"motion_mult", "depth_severity", "keep_fraction", "present_prob",
                                              "confuse_prob"};
  return names;
}

/// Curve points for one axis: episodes pooled over every other axis, grouped
/// by (policy, x). Rates use the binomial standard error, means the sample one.
inline std::vector<CurvePoint> curve(const ExperimentResult& r, const std::string& axis) {
  std::map<std::pair<std::string, double>, std::vector<const EpisodeSummary*>> groups;
  for (const auto& c : r.cells)
    for (const auto& e : c.episodes)
      if (e.error.empty()) groups[{c.cell.policy, axis_value(c.cell, axis)}].push_back(&e.summary);

  std::vector<CurvePoint> out;
  for (const auto& [k, eps] : groups) {
    const int n = static_cast<int>(eps.size());
    auto rate = [&](const char* name, auto pred) {
      int hits = 0;
      for (const auto* e : eps) hits += pred(*e) ? 1 : 0;
      const double p = static_cast<double>(hits) / n;
      out.push_back({k.first, k.second, name, p, binomial_se(p, n), n});
    };
    auto mean = [&](const char* name, auto get) {
      std::vector<double> v;
      for (const auto* e : eps) {
        const double x = get(*e);
        if (std::isfinite(x)) v.push_back(x);
      }
      double m = std::numeric_limits<double>::quiet_NaN();
      if (!v.empty()) {
        m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
      }
      out.push_back({k.first, k.second, name, m, sample_se(v), static_cast<int>(v.size())});
    };
    rate("PU", [](const EpisodeSummary& e) { return e.picked_up; });
    rate("SR", [](const EpisodeSummary& e) { return e.success; });
    rate("SRwD", [](const EpisodeSummary& e) { return e.success && !e.disturbed; });
    mean("eplen", [](const EpisodeSummary& e) { return static_cast<double>(e.length); });
    mean("terminal_est_error", [](const EpisodeSummary& e) { return e.terminal_dest_error; });
  }
  return out;
}

inline std::string curve_csv(const std::vector<CurvePoint>& pts) {
  std::ostringstream os;
  os << "policy,x,metric,mean,stderr,n\n";
  for (const auto& p : pts)
    os << p.policy << ',' << fmt6(p.x) << ',' << p.metric << ',' << fmt6(p.mean) << ',' << fmt6(p.stderr_) << ','
       << p.n << '\n';
  return os.str();
}

/// Writes curve_<axis>.csv for every axis with more than one value, plus
/// summary.txt; returns the summary text.
inline std::string emit_report(const ExperimentResult& r, const std::string& out_dir) {
  if (r.cells.empty()) throw InvalidInput("emit_report: empty results");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  std::ostringstream summary;
  summary << "cells: " << r.cells.size() << "\n";
  for (const auto& axis : swept_axis_names()) {
    std::set<double> xs;
    for (const auto& c : r.cells) xs.insert(axis_value(c.cell, axis));
    if (xs.size() < 2) continue;
    write_text_file((fs::path(out_dir) / ("curve_" + axis + ".csv")).string(), curve_csv(curve(r, axis)));
    summary << "curve: " << axis << " (" << xs.size() << " points)\n";
  }
  summary << "\n" << results_csv(r);
  int failures = 0;
  for (const auto& c : r.cells) failures += c.failures;
  if (failures) summary << "\nfailed episodes: " << failures << "\n";
  write_text_file((fs::path(out_dir) / "summary.txt").string(), summary.str());
  return summary.str();
}

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

/// Reads an experiment config. Unknown keys are rejected so typos surface.
inline ExperimentSpec experiment_from_json(const Json& j) {
  check_schema(j, "experiment config");
  static const std::set<std::string> known{
      "schema_version", "dataset",          "policies",    "motion_multipliers", "depth_severities",
      "keep_fractions", "present_probs",    "confuse_probs", "episodes_per_cell", "master_seed",
      "output_dir",     "write_logs",       "compress_logs", "threads",     "policy",             "motion",
      "max_steps",      "estimator_alpha"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw InvalidInput("experiment config: unknown key '" + k + "'");
  ExperimentSpec s;
  s.dataset_path = j.value("dataset", s.dataset_path);
  s.policies = j.value("policies", s.policies);
  s.motion_multipliers = j.value("motion_multipliers", s.motion_multipliers);
  s.depth_severities = j.value("depth_severities", s.depth_severities);
  s.keep_fractions = j.value("keep_fractions", s.keep_fractions);
  s.present_probs = j.value("present_probs", s.present_probs);
  s.confuse_probs = j.value("confuse_probs", s.confuse_probs);
  s.episodes_per_cell = j.value("episodes_per_cell", s.episodes_per_cell);
  s.master_seed = j.value("master_seed", s.master_seed);
  s.output_dir = j.value("output_dir", s.output_dir);
  s.write_logs = j.value("write_logs", s.write_logs);
  s.compress_logs = j.value("compress_logs", s.compress_logs);
  s.threads = j.value("threads", s.threads);
  s.env.max_steps = j.value("max_steps", s.env.max_steps);
  s.env.estimator_alpha = j.value("estimator_alpha", s.env.estimator_alpha);
  if (j.contains("policy")) {
    const Json& p = j.at("policy");
    s.policy.staleness_limit = p.value("staleness_limit", s.policy.staleness_limit);
    s.policy.scan_steps = p.value("scan_steps", s.policy.scan_steps);
    s.policy.use_planner = p.value("use_planner", s.policy.use_planner);
    s.policy.gt_uses_true_pose = p.value("gt_uses_true_pose", s.policy.gt_uses_true_pose);
  }
  if (j.contains("motion")) {
    const Json& m = j.at("motion");
    s.motion.trans_sigma_at_1 = m.value("trans_sigma", s.motion.trans_sigma_at_1);
    s.motion.rot_sigma_at_1 = m.value("rot_sigma", s.motion.rot_sigma_at_1);
    s.motion.drift_sigma_at_1 = m.value("drift_sigma", s.motion.drift_sigma_at_1);
    s.motion.trans_bias = m.value("trans_bias", s.motion.trans_bias);
    s.motion.rot_bias = m.value("rot_bias", s.motion.rot_bias);
    s.motion.drift_bias = m.value("drift_bias", s.motion.drift_bias);
  }
  s.validate();
  return s;
}

inline Json experiment_to_json(const ExperimentSpec& s) {
  return Json{{"schema_version", kSchemaVersion},
              {"dataset", s.dataset_path},
              {"policies", s.policies},
              {"motion_multipliers", s.motion_multipliers},
              {"depth_severities", s.depth_severities},
              {"keep_fractions", s.keep_fractions},
              {"present_probs", s.present_probs},
              {"confuse_probs", s.confuse_probs},
              {"episodes_per_cell", s.episodes_per_cell},
              {"master_seed", s.master_seed},
              {"output_dir", s.output_dir},
              {"write_logs", s.write_logs},
              {"compress_logs", s.compress_logs},
              {"threads", s.threads},
              {"max_steps", s.env.max_steps},
              {"estimator_alpha", s.env.estimator_alpha},
              {"policy",
               {{"staleness_limit", s.policy.staleness_limit},
                {"scan_steps", s.policy.scan_steps},
                {"use_planner", s.policy.use_planner},
                {"gt_uses_true_pose", s.policy.gt_uses_true_pose}}},
              {"motion",
               {{"trans_sigma", s.motion.trans_sigma_at_1},
                {"rot_sigma", s.motion.rot_sigma_at_1},
                {"drift_sigma", s.motion.drift_sigma_at_1},
                {"trans_bias", s.motion.trans_bias},
                {"rot_bias", s.motion.rot_bias},
                {"drift_bias", s.motion.drift_bias}}}};
}

}  // namespace objdis

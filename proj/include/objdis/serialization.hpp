#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "objdis/error.hpp"
#include "objdis/scene.hpp"
#include "objdis/task.hpp"

namespace objdis {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Points and poses are compact arrays; everything else is an object.

inline void to_json(Json& j, const Point3& p) { j = Json::array({p.x, p.y, p.z}); }
inline void from_json(const Json& j, Point3& p) {
  if (!j.is_array() || j.size() != 3) throw InvalidInput("point must be [x, y, z]");
  p = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline void to_json(Json& j, const Pose& p) { j = Json{{"x", p.x}, {"z", p.z}, {"y", p.y}, {"yaw", p.yaw}}; }
inline void from_json(const Json& j, Pose& p) {
  p = Pose::make(j.at("x").get<double>(), j.at("z").get<double>(), j.value("y", 0.0), j.at("yaw").get<double>());
}

inline void to_json(Json& j, const Box& b) { j = Json{{"min", b.min}, {"max", b.max}}; }
inline void from_json(const Json& j, Box& b) {
  b.min = j.at("min").get<Point3>();
  b.max = j.at("max").get<Point3>();
}

inline void to_json(Json& j, Category c) { j = std::string(category_name(c)); }
inline void from_json(const Json& j, Category& c) {
  const auto name = j.get<std::string>();
  const auto parsed = parse_category(name);
  if (!parsed) throw InvalidInput("unknown category '" + name + "'");
  c = *parsed;
}

inline void to_json(Json& j, const SceneObject& o) {
  j = Json{{"id", o.id}, {"category", o.category}, {"box", o.box}, {"movable", o.movable}};
}
inline void from_json(const Json& j, SceneObject& o) {
  o.id = j.at("id").get<int>();
  o.category = j.at("category").get<Category>();
  o.box = j.at("box").get<Box>();
  o.movable = j.value("movable", true);
  o.held = false;
}

inline void to_json(Json& j, const Placement& p) { j = Json{{"base", p.base}, {"support", p.support}}; }
inline void from_json(const Json& j, Placement& p) {
  p.base = j.at("base").get<Point3>();
  p.support = j.at("support").get<int>();
}

inline void to_json(Json& j, const Scene& s) {
  j = Json{{"seed", s.seed},
           {"bounds", s.bounds},
           {"statics", s.statics},
           {"objects", s.objects},
           {"placements", s.placements}};
}
inline void from_json(const Json& j, Scene& s) {
  s.seed = j.at("seed").get<std::uint64_t>();
  s.bounds = j.at("bounds").get<Box>();
  s.statics = j.at("statics").get<std::vector<Box>>();
  s.objects = j.at("objects").get<std::vector<SceneObject>>();
  s.placements = j.at("placements").get<std::vector<Placement>>();
}

inline void to_json(Json& j, const TaskConfig& t) {
  j = Json{{"scene_seed", t.scene_seed},
           {"source_category", t.source_category},
           {"dest_category", t.dest_category},
           {"source_placement", t.source_placement},
           {"dest_placement", t.dest_placement},
           {"agent_start", t.agent_start}};
}
inline void from_json(const Json& j, TaskConfig& t) {
  t.scene_seed = j.at("scene_seed").get<std::uint64_t>();
  t.source_category = j.at("source_category").get<Category>();
  t.dest_category = j.at("dest_category").get<Category>();
  t.source_placement = j.at("source_placement").get<int>();
  t.dest_placement = j.at("dest_placement").get<int>();
  t.agent_start = j.at("agent_start").get<Pose>();
}

/// NaN is not representable in JSON; it becomes null.
inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json estimate_json(const TargetEstimate& e) {
  if (!e.tracking()) return Json{{"status", "unobserved"}};
  return Json{{"status", "tracking"},
              {"position", e.position},
              {"count", e.observation_count},
              {"since_seen", e.steps_since_seen}};
}

inline Json step_json(const StepRecord& r) {
  return Json{{"t", r.t},
              {"action", std::string(action_name(r.action))},
              {"failed", r.action_failed},
              {"picked_up_now", r.picked_up_now},
              {"disturbed_now", r.disturbed_now},
              {"new_state", r.new_state},
              {"source_first_seen", r.source_first_seen},
              {"dest_first_seen", r.dest_first_seen},
              {"source_visible", r.source_visible},
              {"dest_visible", r.dest_visible},
              {"reward",
               {{"step", r.reward.step},
                {"failed_action", r.reward.failed_action},
                {"success", r.reward.success},
                {"object_observed", r.reward.object_observed},
                {"visit_new_state", r.reward.visit_new_state},
                {"pickup", r.reward.pickup},
                {"arm_distance", r.reward.arm_distance},
                {"total", r.reward.total}}},
              {"true_pose", r.true_pose},
              {"dead_reckoned", r.dead_reckoned},
              {"source_est", estimate_json(r.source_est)},
              {"dest_est", estimate_json(r.dest_est)},
              {"source_truth", r.source_truth},
              {"dest_truth", r.dest_truth}};
}

inline Json summary_json(const EpisodeSummary& s) {
  return Json{{"task_index", s.task_index},
              {"policy", s.policy},
              {"picked_up", s.picked_up},
              {"success", s.success},
              {"disturbed", s.disturbed},
              {"length", s.length},
              {"source_visible_frames", s.source_visible_frames},
              {"dest_visible_frames", s.dest_visible_frames},
              {"terminal_dest_error", number_or_null(s.terminal_dest_error)},
              {"total_reward", s.total_reward},
              {"status", s.status}};
}

/// One JSON object per line: a header with the summary, then every step.
inline std::string log_jsonl(const EpisodeLog& log) {
  std::string out = Json{{"schema_version", kSchemaVersion}, {"summary", summary_json(log.summary)}}.dump();
  out += '\n';
  for (const auto& r : log.steps) {
    out += step_json(r).dump();
    out += '\n';
  }
  return out;
}

inline std::uint64_t log_hash(const EpisodeLog& log) { return fnv1a64(log_jsonl(log)); }

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path);
  out << text;
}

/// gzip with a zero timestamp, so equal text gives equal bytes.
inline void write_gzip_file(const std::string& path, const std::string& text) {
  gzFile f = gzopen(path.c_str(), "wb9");
  if (!f) throw InvalidInput("cannot write " + path);
  const int n = text.empty() ? 0 : gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
  const int rc = gzclose(f);
  if ((!text.empty() && n <= 0) || rc != Z_OK) throw InvalidInput("gzip write failed for " + path);
}

inline std::string read_gzip_file(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw InvalidInput("cannot open " + path);
  std::string out;
  char buf[1 << 15];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
  gzclose(f);
  if (n < 0) throw InvalidInput("gzip read failed for " + path);
  return out;
}

inline void check_schema(const Json& j, const std::string& what) {
  if (!j.contains("schema_version")) throw InvalidInput(what + ": missing schema_version");
  const int v = j.at("schema_version").get<int>();
  if (v != kSchemaVersion)
    throw InvalidInput(what + ": schema_version " + std::to_string(v) + " unsupported (expected " +
                       std::to_string(kSchemaVersion) + ")");
}

/// One task per line, each carrying its own schema_version.
inline std::string dataset_jsonl(const std::vector<TaskConfig>& tasks) {
  std::string out;
  for (const auto& t : tasks) {
    Json j = t;
    j["schema_version"] = kSchemaVersion;
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline std::vector<TaskConfig> parse_dataset_jsonl(std::istream& in, const std::string& what) {
  std::vector<TaskConfig> tasks;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = what + ":" + std::to_string(n);
    try {
      const Json j = Json::parse(line);
      check_schema(j, where);
      tasks.push_back(j.get<TaskConfig>());
    } catch (const Json::exception& e) {
      throw InvalidInput(where + ": " + e.what());
    }
  }
  return tasks;
}

inline std::vector<TaskConfig> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  return parse_dataset_jsonl(in, path);
}

}  // namespace objdis

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "objdis/error.hpp"
#include "objdis/geometry.hpp"
#include "objdis/random.hpp"

namespace objdis {

// ---------------------------------------------------------------------------
// Categories
// ---------------------------------------------------------------------------

enum class Category : std::uint8_t {
  Apple, Bread, Tomato, Lettuce, Pot, Mug, Potato, Pan, Egg, Spatula, Cup, SoapBottle
};

inline constexpr int kNumCategories = 12;

inline constexpr std::array<std::string_view, kNumCategories> kCategoryNames = {
    "Apple", "Bread", "Tomato", "Lettuce", "Pot", "Mug",
    "Potato", "Pan", "Egg", "Spatula", "Cup", "SoapBottle"};

inline std::string_view category_name(Category c) {
  return kCategoryNames[static_cast<std::size_t>(c)];
}

inline std::optional<Category> parse_category(std::string_view name) {
  for (int i = 0; i < kNumCategories; ++i)
    if (kCategoryNames[i] == name) return static_cast<Category>(i);
  return std::nullopt;
}

inline std::vector<Category> all_categories() {
  std::vector<Category> out;
  for (int i = 0; i < kNumCategories; ++i) out.push_back(static_cast<Category>(i));
  return out;
}

/// Canonical box extents (x, y = height, z) per category, in meters.
using CategorySizes = std::array<Point3, kNumCategories>;

inline CategorySizes default_category_sizes() {
  return {{
      {0.08, 0.08, 0.08},  // Apple
      {0.14, 0.09, 0.09},  // Bread
      {0.07, 0.06, 0.07},  // Tomato
      {0.13, 0.12, 0.13},  // Lettuce
      {0.16, 0.12, 0.16},  // Pot
      {0.09, 0.10, 0.09},  // Mug
      {0.09, 0.06, 0.07},  // Potato
      {0.18, 0.05, 0.18},  // Pan
      {0.05, 0.06, 0.05},  // Egg
      {0.16, 0.03, 0.05},  // Spatula
      {0.07, 0.10, 0.07},  // Cup
      {0.07, 0.16, 0.07},  // SoapBottle
  }};
}

// ---------------------------------------------------------------------------
// Boxes
// ---------------------------------------------------------------------------

struct Box {
  Point3 min;
  Point3 max;

  static Box from_base(const Point3& base_center, const Point3& size) {
    return {{base_center.x - size.x / 2, base_center.y, base_center.z - size.z / 2},
            {base_center.x + size.x / 2, base_center.y + size.y, base_center.z + size.z / 2}};
  }
  static Box from_center(const Point3& c, const Point3& half) { return {c - half, c + half}; }

  Point3 center() const { return (min + max) * 0.5; }
  Point3 size() const { return max - min; }
  bool valid() const { return min.x < max.x && min.y < max.y && min.z < max.z; }

  /// Strict interior overlap; boxes that only touch do not intersect.
  bool intersects(const Box& o) const {
    return min.x < o.max.x && o.min.x < max.x && min.y < o.max.y && o.min.y < max.y &&
           min.z < o.max.z && o.min.z < max.z;
  }
  bool contains(const Point3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
           p.z <= max.z;
  }
  /// True when `o` lies inside this box (closed).
  bool encloses(const Box& o) const {
    return o.min.x >= min.x && o.max.x <= max.x && o.min.y >= min.y && o.max.y <= max.y &&
           o.min.z >= min.z && o.max.z <= max.z;
  }
  Box inflated(double m) const { return {min - Point3{m, m, m}, max + Point3{m, m, m}}; }
  Box translated(const Point3& d) const { return {min + d, max + d}; }

  friend bool operator==(const Box&, const Box&) = default;
};

// ---------------------------------------------------------------------------
// Scene
// ---------------------------------------------------------------------------

struct SceneObject {
  int id = 0;
  Category category = Category::Apple;
  Box box;
  bool movable = true;
  bool held = false;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

/// A supported spot where an object's bottom-center may rest.
/// `support` is the index of the furniture box, or -1 for the floor.
struct Placement {
  Point3 base;
  int support = -1;

  friend bool operator==(const Placement&, const Placement&) = default;
};

struct Scene {
  std::uint64_t seed = 0;
  Box bounds;                         // room interior; walls, floor and ceiling are its faces
  std::vector<Box> statics;           // furniture and interior walls
  std::vector<SceneObject> objects;   // movable objects
  std::vector<Placement> placements;  // candidate spots for task relocation

  const SceneObject* find(int id) const {
    for (const auto& o : objects)
      if (o.id == id) return &o;
    return nullptr;
  }
  SceneObject* find(int id) {
    for (auto& o : objects)
      if (o.id == id) return &o;
    return nullptr;
  }
  const SceneObject* find(Category c) const {
    for (const auto& o : objects)
      if (o.category == c) return &o;
    return nullptr;
  }

  friend bool operator==(const Scene&, const Scene&) = default;
};

struct SceneParams {
  double room_min = 4.0;
  double room_max = 5.5;
  double room_height = 2.5;

  int counters_min = 2;
  int counters_max = 3;
  double counter_length_min = 1.0;
  double counter_length_max = 2.0;
  double counter_depth_min = 0.40;
  double counter_depth_max = 0.50;
  double counter_height_min = 0.85;
  double counter_height_max = 0.95;

  int islands_min = 0;
  int islands_max = 1;
  double island_length_min = 0.6;
  double island_length_max = 1.0;
  double island_depth_min = 0.4;
  double island_depth_max = 0.5;
  double island_height_min = 0.75;
  double island_height_max = 0.90;
  double island_clearance = 0.8;  // free gap kept around islands

  std::vector<Category> categories = all_categories();
  CategorySizes sizes = default_category_sizes();

  int placements = 24;
  double floor_fraction = 0.25;
  double surface_margin = 0.10;  // keep placements this far inside a support's top edges
  double object_gap = 0.02;
  int max_retries = 400;

  Point3 size_of(Category c) const { return sizes[static_cast<std::size_t>(c)]; }
};

/// Vertical cylinder approximating the agent body.
struct BodySpec {
  double radius = 0.2;
  double height = 1.0;
};

inline bool cylinder_hits_box(double x, double z, const BodySpec& body, const Box& b) {
  if (!(b.min.y < body.height && b.max.y > 0.0)) return false;
  const double dx = std::max({b.min.x - x, 0.0, x - b.max.x});
  const double dz = std::max({b.min.z - z, 0.0, z - b.max.z});
  return dx * dx + dz * dz < body.radius * body.radius;
}

inline bool cylinder_inside_room(double x, double z, const BodySpec& body, const Box& room) {
  constexpr double eps = 1e-9;  // grid points computed as x0 + i * step
  return x - body.radius >= room.min.x - eps && x + body.radius <= room.max.x + eps &&
         z - body.radius >= room.min.z - eps && z + body.radius <= room.max.z + eps;
}

/// Body collision against statics, and against movables unless excluded.
inline bool body_collides(const Scene& scene, double x, double z, const BodySpec& body,
                          bool include_movables, int ignore_id = -1) {
  if (!cylinder_inside_room(x, z, body, scene.bounds)) return true;
  for (const auto& s : scene.statics)
    if (cylinder_hits_box(x, z, body, s)) return true;
  if (include_movables)
    for (const auto& o : scene.objects)
      if (!o.held && o.id != ignore_id && cylinder_hits_box(x, z, body, o.box)) return true;
  return false;
}

/// Box collision against the room shell and statics.
inline bool box_hits_statics(const Scene& scene, const Box& b) {
  if (!scene.bounds.encloses(b)) return true;
  for (const auto& s : scene.statics)
    if (s.intersects(b)) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Invariant checking
// ---------------------------------------------------------------------------

inline std::vector<std::string> check_scene_invariants(const Scene& scene) {
  std::vector<std::string> v;
  if (!scene.bounds.valid()) v.push_back("room bounds are degenerate");
  for (std::size_t i = 0; i < scene.statics.size(); ++i) {
    if (!scene.statics[i].valid()) v.push_back("static " + std::to_string(i) + " is degenerate");
    if (!scene.bounds.encloses(scene.statics[i]))
      v.push_back("static " + std::to_string(i) + " leaves the room");
  }
  int held = 0;
  for (const auto& o : scene.objects) {
    const std::string tag = "object " + std::to_string(o.id);
    if (!o.box.valid()) v.push_back(tag + " is degenerate");
    if (!scene.bounds.encloses(o.box)) v.push_back(tag + " leaves the room");
    if (o.held) ++held;
    for (std::size_t i = 0; i < scene.statics.size(); ++i)
      if (o.box.intersects(scene.statics[i]))
        v.push_back(tag + " penetrates static " + std::to_string(i));
    if (o.movable && !o.held) {
      bool supported = o.box.min.y == scene.bounds.min.y;
      for (const auto& s : scene.statics) {
        if (supported) break;
        const bool overlaps_top = o.box.min.x < s.max.x && s.min.x < o.box.max.x &&
                                  o.box.min.z < s.max.z && s.min.z < o.box.max.z;
        supported = overlaps_top && o.box.min.y == s.max.y;
      }
      if (!supported) v.push_back(tag + " is not resting on a surface");
    }
  }
  if (held > 1) v.push_back("more than one object is held");
  for (std::size_t i = 0; i < scene.objects.size(); ++i)
    for (std::size_t j = i + 1; j < scene.objects.size(); ++j)
      if (scene.objects[i].box.intersects(scene.objects[j].box))
        v.push_back("objects " + std::to_string(scene.objects[i].id) + " and " +
                    std::to_string(scene.objects[j].id) + " interpenetrate");
  return v;
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

namespace detail {

inline bool footprint_overlaps(const Box& a, const Box& b, double gap) {
  return a.min.x < b.max.x + gap && b.min.x < a.max.x + gap && a.min.z < b.max.z + gap &&
         b.min.z < a.max.z + gap;
}

/// Samples a supported base point, on a furniture top or the floor.
inline std::optional<Placement> sample_placement(const Scene& scene, const SceneParams& p, Rng& rng) {
  const double m = p.surface_margin;
  const bool floor = scene.statics.empty() || bernoulli(rng, p.floor_fraction);
  if (!floor) {
    const int k = uniform_index(rng, static_cast<int>(scene.statics.size()));
    const Box& s = scene.statics[k];
    if (s.size().x <= 2 * m || s.size().z <= 2 * m) return std::nullopt;
    return Placement{{uniform(rng, s.min.x + m, s.max.x - m), s.max.y,
                      uniform(rng, s.min.z + m, s.max.z - m)},
                     k};
  }
  const double wm = 0.15;
  Point3 base{uniform(rng, scene.bounds.min.x + wm, scene.bounds.max.x - wm), scene.bounds.min.y,
              uniform(rng, scene.bounds.min.z + wm, scene.bounds.max.z - wm)};
  for (const auto& s : scene.statics) {
    if (base.x > s.min.x - m && base.x < s.max.x + m && base.z > s.min.z - m &&
        base.z < s.max.z + m)
      return std::nullopt;
  }
  return Placement{base, -1};
}

inline bool object_fits(const Scene& scene, const Box& b, double gap, int ignore_a = -1,
                        int ignore_b = -1) {
  if (box_hits_statics(scene, b)) return false;
  for (const auto& o : scene.objects) {
    if (o.id == ignore_a || o.id == ignore_b) continue;
    if (b.inflated(gap).intersects(o.box)) return false;
  }
  return true;
}

}  // namespace detail

/// Procedural kitchen-like room: counters against walls, optional islands,
/// one movable object per requested category resting on a surface, plus a
/// list of spare supported placements for task relocation.
inline Scene generate_scene(std::uint64_t seed, const SceneParams& p) {
  Rng rng(derive_seed(seed, "scene"));
  Scene scene;
  scene.seed = seed;
  const double w = uniform(rng, p.room_min, p.room_max);
  const double d = uniform(rng, p.room_min, p.room_max);
  scene.bounds = {{0.0, 0.0, 0.0}, {w, p.room_height, d}};

  auto fail = [&](const std::string& what) {
    return GenerationError("scene generation failed for seed " + std::to_string(seed) + ": " + what);
  };

  // Counters flush against walls.
  const int counters =
      p.counters_max > p.counters_min
          ? std::uniform_int_distribution<int>(p.counters_min, p.counters_max)(rng)
          : p.counters_min;
  for (int c = 0; c < counters; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < p.max_retries && !placed; ++attempt) {
      const int wall = uniform_index(rng, 4);
      const double len = uniform(rng, p.counter_length_min, p.counter_length_max);
      const double dep = uniform(rng, p.counter_depth_min, p.counter_depth_max);
      const double hgt = uniform(rng, p.counter_height_min, p.counter_height_max);
      const bool along_x = wall < 2;
      const double span = along_x ? w : d;
      if (len >= span) continue;
      const double start = uniform(rng, 0.0, span - len);
      Box b;
      if (along_x) {
        // wall-side edge set exactly, not as (d - dep) + dep
        b = wall == 0 ? Box{{start, 0.0, 0.0}, {start + len, hgt, dep}}
                      : Box{{start, 0.0, d - dep}, {start + len, hgt, d}};
      } else {
        b = wall == 2 ? Box{{0.0, 0.0, start}, {dep, hgt, start + len}}
                      : Box{{w - dep, 0.0, start}, {w, hgt, start + len}};
      }
      bool ok = true;
      for (const auto& s : scene.statics)
        if (detail::footprint_overlaps(b, s, 0.0)) ok = false;
      if (!ok) continue;
      scene.statics.push_back(b);
      placed = true;
    }
    if (!placed) throw fail("could not place counter " + std::to_string(c));
  }

  // Free-standing islands keep a wide clearance so the free space stays connected.
  const int islands =
      p.islands_max > p.islands_min
          ? std::uniform_int_distribution<int>(p.islands_min, p.islands_max)(rng)
          : p.islands_min;
  for (int c = 0; c < islands; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < p.max_retries && !placed; ++attempt) {
      double lx = uniform(rng, p.island_length_min, p.island_length_max);
      double lz = uniform(rng, p.island_depth_min, p.island_depth_max);
      if (bernoulli(rng, 0.5)) std::swap(lx, lz);
      const double hgt = uniform(rng, p.island_height_min, p.island_height_max);
      const double cl = p.island_clearance;
      if (w - lx <= 2 * cl || d - lz <= 2 * cl) continue;
      const double x0 = uniform(rng, cl, w - cl - lx);
      const double z0 = uniform(rng, cl, d - cl - lz);
      Box b{{x0, 0.0, z0}, {x0 + lx, hgt, z0 + lz}};
      bool ok = true;
      for (const auto& s : scene.statics)
        if (detail::footprint_overlaps(b, s, cl)) ok = false;
      if (!ok) continue;
      scene.statics.push_back(b);
      placed = true;
    }
    if (!placed) throw fail("could not place island " + std::to_string(c));
  }

  int next_id = 0;
  for (Category cat : p.categories) {
    const Point3 size = p.size_of(cat);
    bool placed = false;
    for (int attempt = 0; attempt < p.max_retries && !placed; ++attempt) {
      auto pl = detail::sample_placement(scene, p, rng);
      if (!pl) continue;
      const Box b = Box::from_base(pl->base, size);
      if (!detail::object_fits(scene, b, p.object_gap)) continue;
      scene.objects.push_back({next_id++, cat, b, true, false});
      placed = true;
    }
    if (!placed) throw fail(std::string("could not place object ") + std::string(category_name(cat)));
  }

  for (int i = 0, attempts = 0; i < p.placements; ++attempts) {
    if (attempts > p.max_retries * std::max(1, p.placements)) throw fail("could not sample placements");
    if (auto pl = detail::sample_placement(scene, p, rng)) {
      scene.placements.push_back(*pl);
      ++i;
    }
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Reachability
// ---------------------------------------------------------------------------

struct GridCell {
  int i = 0;
  int k = 0;
  double x = 0.0;
  double z = 0.0;

  friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// Grid positions (anchored at the room's min corner, spacing `step`) where the
/// body cylinder is collision-free. Every position admits all 8 yaw bins since
/// the body is rotationally symmetric.
inline std::vector<GridCell> reachable_positions(const Scene& scene, double step = 0.2,
                                                 const BodySpec& body = {},
                                                 bool include_movables = false) {
  if (!(step > 0.0)) throw InvalidInput("grid step must be positive");
  std::vector<GridCell> out;
  const double x0 = scene.bounds.min.x;
  const double z0 = scene.bounds.min.z;
  const int ni = static_cast<int>(std::floor((scene.bounds.max.x - x0) / step + 1e-9));
  const int nk = static_cast<int>(std::floor((scene.bounds.max.z - z0) / step + 1e-9));
  for (int k = 0; k <= nk; ++k) {
    for (int i = 0; i <= ni; ++i) {
      const double x = x0 + i * step;
      const double z = z0 + k * step;
      if (!body_collides(scene, x, z, body, include_movables)) out.push_back({i, k, x, z});
    }
  }
  return out;
}

/// 4-connected shortest path over collision-free grid cells (A*). Empty when
/// either endpoint is blocked or no path exists.
inline std::vector<GridCell> grid_path(const Scene& scene, const GridCell& from, const GridCell& to,
                                       double step = 0.2, const BodySpec& body = {},
                                       bool include_movables = true) {
  const auto cells = reachable_positions(scene, step, body, include_movables);
  auto key = [](int i, int k) { return (static_cast<std::int64_t>(i) << 32) ^ static_cast<std::uint32_t>(k); };
  std::unordered_map<std::int64_t, std::size_t> index;
  for (std::size_t n = 0; n < cells.size(); ++n) index[key(cells[n].i, cells[n].k)] = n;
  if (!index.count(key(from.i, from.k)) || !index.count(key(to.i, to.k))) return {};

  const std::size_t s = index[key(from.i, from.k)];
  const std::size_t g = index[key(to.i, to.k)];
  std::vector<int> cost(cells.size(), -1);
  std::vector<std::size_t> parent(cells.size(), cells.size());
  using Item = std::pair<int, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  auto h = [&](std::size_t n) { return std::abs(cells[n].i - to.i) + std::abs(cells[n].k - to.k); };
  cost[s] = 0;
  open.push({h(s), s});
  constexpr int di[4] = {1, -1, 0, 0};
  constexpr int dk[4] = {0, 0, 1, -1};
  while (!open.empty()) {
    const auto [f, n] = open.top();
    open.pop();
    if (n == g) break;
    if (f - h(n) > cost[n]) continue;
    for (int a = 0; a < 4; ++a) {
      auto it = index.find(key(cells[n].i + di[a], cells[n].k + dk[a]));
      if (it == index.end()) continue;
      const std::size_t m = it->second;
      if (cost[m] < 0 || cost[n] + 1 < cost[m]) {
        cost[m] = cost[n] + 1;
        parent[m] = n;
        open.push({cost[m] + h(m), m});
      }
    }
  }
  if (cost[g] < 0) return {};
  std::vector<GridCell> path;
  for (std::size_t n = g; n != cells.size(); n = parent[n]) {
    path.push_back(cells[n]);
    if (n == s) break;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

// ---------------------------------------------------------------------------
// Tasks
// ---------------------------------------------------------------------------

struct TaskConfig {
  std::uint64_t scene_seed = 0;
  Category source_category = Category::Apple;
  Category dest_category = Category::Bread;
  int source_placement = 0;
  int dest_placement = 1;
  Pose agent_start;

  friend bool operator==(const TaskConfig&, const TaskConfig&) = default;
};

struct TaskScene {
  Scene scene;
  int source_id = -1;
  int dest_id = -1;
};

/// Relocates the task's source and destination objects onto their placements.
inline TaskScene instantiate_task(const Scene& base, const TaskConfig& cfg,
                                  const SceneParams& params = {}, const BodySpec& body = {}) {
  if (cfg.scene_seed != base.seed)
    throw InvalidInput("scene_seed " + std::to_string(cfg.scene_seed) + " does not match scene " +
                       std::to_string(base.seed));
  if (cfg.source_category == cfg.dest_category)
    throw InvalidInput("source_category and dest_category must differ");
  const SceneObject* src = base.find(cfg.source_category);
  if (!src) throw InvalidInput("source_category " + std::string(category_name(cfg.source_category)) + " not in scene");
  const SceneObject* dst = base.find(cfg.dest_category);
  if (!dst) throw InvalidInput("dest_category " + std::string(category_name(cfg.dest_category)) + " not in scene");
  const int np = static_cast<int>(base.placements.size());
  if (cfg.source_placement < 0 || cfg.source_placement >= np)
    throw InvalidInput("source_placement " + std::to_string(cfg.source_placement) + " out of range");
  if (cfg.dest_placement < 0 || cfg.dest_placement >= np)
    throw InvalidInput("dest_placement " + std::to_string(cfg.dest_placement) + " out of range");
  if (cfg.source_placement == cfg.dest_placement)
    throw InvalidInput("source_placement and dest_placement must differ");

  TaskScene ts{base, src->id, dst->id};
  SceneObject* s = ts.scene.find(src->id);
  SceneObject* d = ts.scene.find(dst->id);
  s->box = Box::from_base(base.placements[cfg.source_placement].base, s->box.size());
  d->box = Box::from_base(base.placements[cfg.dest_placement].base, d->box.size());
  if (!detail::object_fits(ts.scene, s->box, 0.0, s->id))
    throw InvalidInput("source_placement " + std::to_string(cfg.source_placement) + " collides");
  if (!detail::object_fits(ts.scene, d->box, 0.0, d->id))
    throw InvalidInput("dest_placement " + std::to_string(cfg.dest_placement) + " collides");
  (void)params;
  if (body_collides(ts.scene, cfg.agent_start.x, cfg.agent_start.z, body, true))
    throw InvalidInput("agent_start collides with the scene");
  return ts;
}

struct DatasetResult {
  std::vector<TaskConfig> tasks;
  std::vector<std::string> warnings;
};

namespace detail {

/// Cells from which an object centered at `c` sits inside comfortable arm reach.
inline std::vector<std::size_t> reach_cells(const std::vector<GridCell>& cells, const Point3& c) {
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n < cells.size(); ++n) {
    const double r = std::hypot(cells[n].x - c.x, cells[n].z - c.z);
    if (r >= 0.25 && r <= 0.55) out.push_back(n);
  }
  return out;
}

inline std::vector<int> components(const std::vector<GridCell>& cells) {
  std::unordered_map<std::int64_t, std::size_t> index;
  auto key = [](int i, int k) { return (static_cast<std::int64_t>(i) << 32) ^ static_cast<std::uint32_t>(k); };
  for (std::size_t n = 0; n < cells.size(); ++n) index[key(cells[n].i, cells[n].k)] = n;
  std::vector<int> comp(cells.size(), -1);
  int next = 0;
  for (std::size_t s = 0; s < cells.size(); ++s) {
    if (comp[s] >= 0) continue;
    std::vector<std::size_t> stack{s};
    comp[s] = next;
    while (!stack.empty()) {
      const std::size_t n = stack.back();
      stack.pop_back();
      constexpr int di[4] = {1, -1, 0, 0};
      constexpr int dk[4] = {0, 0, 1, -1};
      for (int a = 0; a < 4; ++a) {
        auto it = index.find(key(cells[n].i + di[a], cells[n].k + dk[a]));
        if (it != index.end() && comp[it->second] < 0) {
          comp[it->second] = next;
          stack.push_back(it->second);
        }
      }
    }
    ++next;
  }
  return comp;
}

}  // namespace detail

/// Samples up to `n_pairs_per_scene` ordered (source, destination) category
/// pairs per scene without replacement, least-used categories first, each with relocated placements and a
/// start cell from which both objects can be reached.
inline DatasetResult generate_task_dataset(const std::vector<std::uint64_t>& seeds,
                                           const SceneParams& params, int n_pairs_per_scene,
                                           const BodySpec& body = {}) {
  DatasetResult out;
  std::array<int, kNumCategories> usage{};
  for (std::uint64_t seed : seeds) {
    Scene scene;
    try {
      scene = generate_scene(seed, params);
    } catch (const GenerationError& e) {
      out.warnings.push_back(e.what());
      continue;
    }
    if (scene.objects.size() < 2) {
      out.warnings.push_back("scene " + std::to_string(seed) + " skipped: fewer than 2 movable objects");
      continue;
    }
    Rng rng(derive_seed(seed, "tasks"));
    std::vector<std::pair<Category, Category>> pairs;
    for (const auto& a : scene.objects)
      for (const auto& b : scene.objects)
        if (a.id != b.id) pairs.emplace_back(a.category, b.category);
    std::shuffle(pairs.begin(), pairs.end(), rng);

    int accepted = 0;
    const int np = static_cast<int>(scene.placements.size());
    while (accepted < n_pairs_per_scene && !pairs.empty()) {
      // least-used categories first keeps the dataset's category histogram flat
      auto pick = std::min_element(pairs.begin(), pairs.end(), [&](const auto& a, const auto& b) {
        return usage[static_cast<std::size_t>(a.first)] + usage[static_cast<std::size_t>(a.second)] <
               usage[static_cast<std::size_t>(b.first)] + usage[static_cast<std::size_t>(b.second)];
      });
      const auto [sc, dc] = *pick;
      pairs.erase(pick);
      for (int attempt = 0; attempt < 40; ++attempt) {
        TaskConfig cfg;
        cfg.scene_seed = seed;
        cfg.source_category = sc;
        cfg.dest_category = dc;
        cfg.source_placement = uniform_index(rng, np);
        cfg.dest_placement = uniform_index(rng, np);
        if (cfg.source_placement == cfg.dest_placement) continue;

        TaskScene ts{scene, scene.find(sc)->id, scene.find(dc)->id};
        SceneObject* s = ts.scene.find(ts.source_id);
        SceneObject* d = ts.scene.find(ts.dest_id);
        s->box = Box::from_base(scene.placements[cfg.source_placement].base, s->box.size());
        d->box = Box::from_base(scene.placements[cfg.dest_placement].base, d->box.size());
        if (!detail::object_fits(ts.scene, s->box, params.object_gap, s->id)) continue;
        if (!detail::object_fits(ts.scene, d->box, params.object_gap, d->id)) continue;

        const auto cells = reachable_positions(ts.scene, 0.2, body, true);
        if (cells.empty()) continue;
        const auto comp = detail::components(cells);
        const auto rs = detail::reach_cells(cells, s->box.center());
        const auto rd = detail::reach_cells(cells, d->box.center());
        std::vector<int> ok_components;
        for (std::size_t a : rs)
          for (std::size_t b : rd)
            if (comp[a] == comp[b]) ok_components.push_back(comp[a]);
        if (ok_components.empty()) continue;
        std::vector<std::size_t> starts;
        for (std::size_t n = 0; n < cells.size(); ++n)
          if (std::find(ok_components.begin(), ok_components.end(), comp[n]) != ok_components.end())
            starts.push_back(n);
        const GridCell& c = cells[starts[uniform_index(rng, static_cast<int>(starts.size()))]];
        const int yaw_bin = uniform_index(rng, 8);
        cfg.agent_start = Pose::make(c.x, c.z, 0.0, yaw_bin * kPi / 4.0);
        out.tasks.push_back(cfg);
        ++usage[static_cast<std::size_t>(sc)];
        ++usage[static_cast<std::size_t>(dc)];
        ++accepted;
        break;
      }
    }
    if (accepted < n_pairs_per_scene)
      out.warnings.push_back("scene " + std::to_string(seed) + " yielded " + std::to_string(accepted) +
                             " of " + std::to_string(n_pairs_per_scene) + " requested pairs");
  }
  return out;
}

}  // namespace objdis

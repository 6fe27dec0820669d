#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "objdis/frames.hpp"
#include "objdis/geometry.hpp"
#include "objdis/random.hpp"
#include "objdis/scene.hpp"

namespace objdis {

// ---------------------------------------------------------------------------
// Raycast rendering
// ---------------------------------------------------------------------------

struct RenderedFrames {
  DepthFrame depth;
  InstanceFrame instances;
};

/// One ray per pixel through the pinhole model, nearest box hit per ray.
/// The room shell renders as background. Boxes containing the camera are
/// skipped. Hits at or beyond max_range are reported as no-return.
inline RenderedFrames render(const Scene& scene, const Pose& camera_pose, const CameraModel& cam) {
  cam.validate();
  RenderedFrames out{DepthFrame(cam.width, cam.height, cam.max_range),
                     InstanceFrame(cam.width, cam.height)};
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const Point3 o = camera_pose.translation();
  const double c = std::cos(camera_pose.yaw);
  const double s = std::sin(camera_pose.yaw);

  struct Item {
    const Box* box;
    std::int32_t id;
  };
  std::vector<Item> items;
  items.reserve(scene.statics.size() + scene.objects.size());
  for (const auto& b : scene.statics) items.push_back({&b, kBackground});
  for (const auto& ob : scene.objects) items.push_back({&ob.box, ob.id});

  // Entry/exit parameters of one axis slab; dir==0 gives all-or-nothing.
  auto slab = [](double origin, double dir, double lo, double hi, double& t0, double& t1) {
    if (dir == 0.0) {
      if (origin < lo || origin > hi) { t0 = kInf; t1 = -kInf; }
      else { t0 = -kInf; t1 = kInf; }
      return;
    }
    const double inv = 1.0 / dir;
    double a = (lo - origin) * inv;
    double b = (hi - origin) * inv;
    if (a > b) std::swap(a, b);
    t0 = a;
    t1 = b;
  };
  // Distance to leave the room along one axis.
  auto exit_t = [](double origin, double dir, double lo, double hi) {
    if (dir > 0.0) return (hi - origin) / dir;
    if (dir < 0.0) return (lo - origin) / dir;
    return kInf;
  };

  struct Cand {
    double t0, t1;
    std::size_t item;
  };
  std::vector<Cand> cands;
  cands.reserve(items.size());
  std::vector<double> row_dy(cam.height);
  std::vector<double> row_room(cam.height);
  for (int v = 0; v < cam.height; ++v) {
    row_dy[v] = -(v - cam.cy) / cam.fy;  // camera +y is down
    row_room[v] = exit_t(o.y, row_dy[v], scene.bounds.min.y, scene.bounds.max.y);
  }

  for (int u = 0; u < cam.width; ++u) {
    const double a = (u - cam.cx) / cam.fx;
    const double dx = a * c + s;
    const double dz = -a * s + c;
    const double col_room = std::min(exit_t(o.x, dx, scene.bounds.min.x, scene.bounds.max.x),
                                     exit_t(o.z, dz, scene.bounds.min.z, scene.bounds.max.z));
    cands.clear();
    for (std::size_t n = 0; n < items.size(); ++n) {
      const Box& b = *items[n].box;
      double x0, x1, z0, z1;
      slab(o.x, dx, b.min.x, b.max.x, x0, x1);
      slab(o.z, dz, b.min.z, b.max.z, z0, z1);
      const double t0 = std::max(x0, z0);
      const double t1 = std::min(x1, z1);
      if (t0 <= t1 && t1 > 0.0) cands.push_back({t0, t1, n});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& p, const Cand& q) {
      return p.t0 < q.t0 || (p.t0 == q.t0 && p.item < q.item);
    });

    for (int v = 0; v < cam.height; ++v) {
      const double dy = row_dy[v];
      double best = std::min(col_room, row_room[v]);
      std::int32_t id = kBackground;
      for (const Cand& cd : cands) {
        if (cd.t0 >= best) break;
        const Box& b = *items[cd.item].box;
        double y0, y1;
        slab(o.y, dy, b.min.y, b.max.y, y0, y1);
        const double tn = std::max(cd.t0, y0);
        const double tf = std::min(cd.t1, y1);
        if (tn <= tf && tn > 0.0 && tn < best) {
          best = tn;
          id = items[cd.item].id;
        }
      }
      const std::size_t i = static_cast<std::size_t>(v) * cam.width + u;
      if (best >= cam.max_range) {
        out.depth.data[i] = cam.max_range;
        out.instances.ids[i] = kBackground;
      } else {
        out.depth.data[i] = best;
        out.instances.ids[i] = id;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Masks and degradations
// ---------------------------------------------------------------------------

inline Mask gt_mask(const InstanceFrame& frame, std::int32_t object_id) {
  Mask m(frame.width, frame.height);
  for (std::size_t i = 0; i < frame.ids.size(); ++i) m.bits[i] = frame.ids[i] == object_id ? 1 : 0;
  return m;
}

/// Sorted distinct object ids present in the frame.
inline std::vector<std::int32_t> visible_ids(const InstanceFrame& frame) {
  std::vector<std::int32_t> ids;
  for (auto id : frame.ids)
    if (id != kBackground) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

struct DegradationSpec {
  double keep_fraction = 1.0;
  double present_prob = 1.0;
  double confuse_prob = 0.0;
  std::uint64_t rng_stream = 0;

  void validate() const {
    auto unit = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!unit(keep_fraction) || !unit(present_prob) || !unit(confuse_prob))
      throw InvalidInput("degradation probabilities must lie in [0, 1]");
  }
  bool is_identity() const { return keep_fraction == 1.0 && present_prob == 1.0 && confuse_prob == 0.0; }
};

/// Keeps a uniformly random subset of round(keep_fraction * |mask|) pixels.
inline Mask degrade_partial(const Mask& mask, double keep_fraction, Rng& rng) {
  if (!(keep_fraction >= 0.0 && keep_fraction <= 1.0)) throw InvalidInput("keep_fraction outside [0, 1]");
  std::vector<std::size_t> on;
  for (std::size_t i = 0; i < mask.bits.size(); ++i)
    if (mask.bits[i]) on.push_back(i);
  const auto keep = static_cast<std::size_t>(std::llround(keep_fraction * static_cast<double>(on.size())));
  if (keep == on.size()) return mask;
  // Partial Fisher-Yates: the first `keep` entries become the sample.
  for (std::size_t j = 0; j < keep; ++j) {
    const auto r = std::uniform_int_distribution<std::size_t>(j, on.size() - 1)(rng);
    std::swap(on[j], on[r]);
  }
  Mask out(mask.width, mask.height);
  for (std::size_t j = 0; j < keep; ++j) out.bits[on[j]] = 1;
  return out;
}

/// Whole-mask dropout: one draw per frame.
inline Mask degrade_missing(const Mask& mask, double present_prob, Rng& rng) {
  if (!(present_prob >= 0.0 && present_prob <= 1.0)) throw InvalidInput("present_prob outside [0, 1]");
  if (bernoulli(rng, present_prob)) return mask;
  return Mask(mask.width, mask.height);
}

/// With probability confuse_prob returns the mask of another visible object
/// (empty if none); otherwise the target's own mask.
inline Mask degrade_confuse(const InstanceFrame& frame, std::int32_t target_id, double confuse_prob,
                            Rng& rng) {
  if (!(confuse_prob >= 0.0 && confuse_prob <= 1.0)) throw InvalidInput("confuse_prob outside [0, 1]");
  if (!bernoulli(rng, confuse_prob)) return gt_mask(frame, target_id);
  std::vector<std::int32_t> others;
  for (auto id : visible_ids(frame))
    if (id != target_id) others.push_back(id);
  if (others.empty()) return Mask(frame.width, frame.height);
  return gt_mask(frame, others[uniform_index(rng, static_cast<int>(others.size()))]);
}

/// The full degradation chain applied to one target per frame:
/// confusion picks the mask, dropout removes it, then pixels are thinned.
inline Mask degrade(const InstanceFrame& frame, std::int32_t target_id, const DegradationSpec& spec,
                    Rng& rng) {
  Mask m = spec.confuse_prob > 0.0 ? degrade_confuse(frame, target_id, spec.confuse_prob, rng)
                                   : gt_mask(frame, target_id);
  if (spec.present_prob < 1.0) m = degrade_missing(m, spec.present_prob, rng);
  if (spec.keep_fraction < 1.0) m = degrade_partial(m, spec.keep_fraction, rng);
  return m;
}

// ---------------------------------------------------------------------------
// Depth noise
// ---------------------------------------------------------------------------

/// Simplified range-sensor distortion: a random sub-pixel lateral shift of the
/// sampled ray, additive Gaussian noise with std c0 + c1 z + c2 z^2, then
/// quantization to multiples of quant_step.
struct DepthNoiseSpec {
  double lateral_shift = 0.0;  // std of the per-pixel shift, pixels
  double sigma_c0 = 0.0;
  double sigma_c1 = 0.0;
  double sigma_c2 = 0.0;
  double quant_step = 0.0;  // meters
  double min_depth = 1e-3;

  double sigma(double z) const { return sigma_c0 + sigma_c1 * z + sigma_c2 * z * z; }

  bool is_identity() const {
    return lateral_shift == 0.0 && sigma_c0 == 0.0 && sigma_c1 == 0.0 && sigma_c2 == 0.0 &&
           quant_step == 0.0;
  }

  DepthNoiseSpec scaled(double severity) const {
    DepthNoiseSpec s = *this;
    s.lateral_shift *= severity;
    s.sigma_c0 *= severity;
    s.sigma_c1 *= severity;
    s.sigma_c2 *= severity;
    s.quant_step *= severity;
    return s;
  }

  void validate() const {
    for (double v : {lateral_shift, sigma_c0, sigma_c1, sigma_c2, quant_step})
      if (!(std::isfinite(v) && v >= 0.0)) throw InvalidInput("depth noise parameters must be finite and >= 0");
  }

  /// Kinect-like defaults used at severity 1.
  static DepthNoiseSpec kinect_like() {
    DepthNoiseSpec s;
    s.lateral_shift = 0.5;
    s.sigma_c0 = 0.001;
    s.sigma_c1 = 0.0;
    s.sigma_c2 = 0.0025;
    s.quant_step = 0.002;
    return s;
  }
};

inline DepthFrame apply_depth_noise(const DepthFrame& frame, const DepthNoiseSpec& model, Rng& rng) {
  model.validate();
  if (model.is_identity()) return frame;
  DepthFrame out = frame;
  const double lo = model.min_depth;
  for (int v = 0; v < frame.height; ++v) {
    for (int u = 0; u < frame.width; ++u) {
      int su = u, sv = v;
      if (model.lateral_shift > 0.0) {
        su = std::clamp(static_cast<int>(std::lround(u + gaussian(rng, model.lateral_shift))), 0, frame.width - 1);
        sv = std::clamp(static_cast<int>(std::lround(v + gaussian(rng, model.lateral_shift))), 0, frame.height - 1);
      }
      double z = frame.at(su, sv);
      if (!(z > 0.0 && z < frame.max_range)) {
        out.at(u, v) = frame.max_range;
        continue;
      }
      z += gaussian(rng, model.sigma(z));
      if (model.quant_step > 0.0) z = std::round(z / model.quant_step) * model.quant_step;
      out.at(u, v) = std::clamp(z, lo, frame.max_range);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Debug dumps
// ---------------------------------------------------------------------------

/// Binary PGM (P5), 16-bit big-endian, depth in millimeters (saturating).
inline void write_depth_pgm(std::ostream& os, const DepthFrame& f) {
  os << "P5\n" << f.width << ' ' << f.height << "\n65535\n";
  for (double d : f.data) {
    const auto mm = static_cast<std::uint16_t>(std::clamp(std::lround(d * 1000.0), 0L, 65535L));
    const char bytes[2] = {static_cast<char>(mm >> 8), static_cast<char>(mm & 0xff)};
    os.write(bytes, 2);
  }
}

/// Binary PBM (P4); set pixels are written as 1 (black), rows padded to bytes.
inline void write_mask_pbm(std::ostream& os, const Mask& m) {
  os << "P4\n" << m.width << ' ' << m.height << "\n";
  const int row_bytes = (m.width + 7) / 8;
  std::vector<unsigned char> row(row_bytes);
  for (int v = 0; v < m.height; ++v) {
    std::fill(row.begin(), row.end(), 0);
    for (int u = 0; u < m.width; ++u)
      if (m.at(u, v)) row[u / 8] |= static_cast<unsigned char>(0x80 >> (u % 8));
    os.write(reinterpret_cast<const char*>(row.data()), row_bytes);
  }
}

inline void write_depth_pgm(const std::string& path, const DepthFrame& f) {
  std::ofstream os(path, std::ios::binary);
  write_depth_pgm(os, f);
}

inline void write_mask_pbm(const std::string& path, const Mask& m) {
  std::ofstream os(path, std::ios::binary);
  write_mask_pbm(os, m);
}

}  // namespace objdis

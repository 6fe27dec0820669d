#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "objdis/geometry.hpp"

namespace objdis {

/// Per-pixel camera-frame depth (distance along the optical axis). Pixels
/// with no return hold exactly max_range.
struct DepthFrame {
  int width = 0;
  int height = 0;
  double max_range = 0.0;
  std::vector<double> data;

  DepthFrame() = default;
  DepthFrame(int w, int h, double range) : width(w), height(h), max_range(range),
      data(static_cast<std::size_t>(w) * h, range) {}

  double at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
  double& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }

  bool valid(std::size_t i) const { return data[i] > 0.0 && data[i] < max_range; }

  friend bool operator==(const DepthFrame&, const DepthFrame&) = default;
};

inline constexpr std::int32_t kBackground = -1;

struct InstanceFrame {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> ids;

  InstanceFrame() = default;
  InstanceFrame(int w, int h) : width(w), height(h),
      ids(static_cast<std::size_t>(w) * h, kBackground) {}

  std::int32_t at(int u, int v) const { return ids[static_cast<std::size_t>(v) * width + u]; }

  friend bool operator==(const InstanceFrame&, const InstanceFrame&) = default;
};

struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  bool at(int u, int v) const { return bits[static_cast<std::size_t>(v) * width + u] != 0; }
  void set(int u, int v, bool on = true) {
    bits[static_cast<std::size_t>(v) * width + u] = on ? 1 : 0;
  }

  std::size_t count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
  }
  bool empty() const { return std::none_of(bits.begin(), bits.end(), [](auto b) { return b != 0; }); }

  /// True when every set pixel of this mask is also set in `other`.
  bool subset_of(const Mask& other) const {
    if (other.width != width || other.height != height) return false;
    for (std::size_t i = 0; i < bits.size(); ++i)
      if (bits[i] && !other.bits[i]) return false;
    return true;
  }

  friend bool operator==(const Mask&, const Mask&) = default;
};

/// Mean camera-frame point over masked pixels with a valid depth return.
/// Returns nullopt when nothing under the mask has valid depth.
inline std::optional<Point3> backproject_masked_centroid(const DepthFrame& depth, const Mask& mask,
                                                         const CameraModel& cam) {
  if (depth.width != mask.width || depth.height != mask.height || depth.width != cam.width ||
      depth.height != cam.height)
    throw InvalidInput("depth, mask and camera resolutions differ");

  double sx = 0.0, sy = 0.0, sz = 0.0;
  std::size_t n = 0;
  for (int v = 0; v < depth.height; ++v) {
    const std::size_t row = static_cast<std::size_t>(v) * depth.width;
    for (int u = 0; u < depth.width; ++u) {
      const std::size_t i = row + u;
      if (!mask.bits[i]) continue;
      const double d = depth.data[i];
      if (!(d > 0.0 && d < cam.max_range)) continue;
      sx += (u - cam.cx) * d / cam.fx;
      sy += (v - cam.cy) * d / cam.fy;
      sz += d;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  const double count = static_cast<double>(n);
  return Point3{sx / count, sy / count, sz / count};
}

}  // namespace objdis

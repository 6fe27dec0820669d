#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include "objdis/error.hpp"

namespace objdis {

// Frames:
//   world / agent : +x right, +y up (height), +z forward. Yaw turns +z toward +x.
//   camera        : +x right, +y down, +z forward (optical axis).
// The agent frame has its origin at the body center on the floor.

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Point3& operator+=(const Point3& o) {
    x += o.x; y += o.y; z += o.z;
    return *this;
  }
  Point3& operator-=(const Point3& o) {
    x -= o.x; y -= o.y; z -= o.z;
    return *this;
  }
  Point3& operator*=(double s) {
    x *= s; y *= s; z *= s;
    return *this;
  }
  friend Point3 operator+(Point3 a, const Point3& b) { return a += b; }
  friend Point3 operator-(Point3 a, const Point3& b) { return a -= b; }
  friend Point3 operator*(Point3 a, double s) { return a *= s; }
  friend Point3 operator*(double s, Point3 a) { return a *= s; }
  friend Point3 operator-(const Point3& a) { return {-a.x, -a.y, -a.z}; }
  friend bool operator==(const Point3&, const Point3&) = default;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double horizontal_norm() const { return std::hypot(x, z); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double distance(const Point3& a, const Point3& b) { return (a - b).norm(); }

inline constexpr double kPi = std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

/// Smallest signed difference a - b, wrapped into (-pi, pi].
inline double angle_diff(double a, double b) { return normalize_angle(a - b); }

/// Planar rigid transform with a height offset. Maps frame-local points to
/// the parent frame: rotate about +y by yaw, then translate by (x, y, z).
struct Pose {
  double x = 0.0;
  double z = 0.0;
  double y = 0.0;
  double yaw = 0.0;

  static Pose identity() { return {}; }
  static Pose make(double x, double z, double y, double yaw) {
    return {x, z, y, normalize_angle(yaw)};
  }

  Point3 translation() const { return {x, y, z}; }
  friend bool operator==(const Pose&, const Pose&) = default;
};

inline Point3 rotate_yaw(const Point3& p, double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {p.x * c + p.z * s, p.y, -p.x * s + p.z * c};
}

inline Point3 transform_point(const Pose& pose, const Point3& p) {
  return rotate_yaw(p, pose.yaw) + pose.translation();
}

/// compose(a, b) applies b first, then a.
inline Pose compose(const Pose& a, const Pose& b) {
  const Point3 t = transform_point(a, b.translation());
  return Pose::make(t.x, t.z, t.y, a.yaw + b.yaw);
}

inline Pose invert(const Pose& a) {
  const Point3 t = rotate_yaw(-a.translation(), -a.yaw);
  return Pose::make(t.x, t.z, t.y, -a.yaw);
}

/// Pose of `b` expressed in the frame of `a`.
inline Pose relative(const Pose& a, const Pose& b) { return compose(invert(a), b); }

/// Horizontal bearing of an agent-frame point; positive means to the right.
inline double bearing(const Point3& p) { return std::atan2(p.x, p.z); }

/// Pinhole intrinsics. Pixel (u, v) maps to the ray ((u - cx)/fx, (v - cy)/fy, 1).
struct CameraModel {
  int width = 224;
  int height = 224;
  double fx = 112.0;
  double fy = 112.0;
  double cx = 112.0;
  double cy = 112.0;
  double horizontal_fov = 90.0;  // degrees
  double max_range = 5.0;        // meters

  /// Square pixels; vertical FOV follows from the aspect ratio.
  static CameraModel from_fov(int width, int height, double horizontal_fov_deg, double max_range) {
    if (width <= 0 || height <= 0) throw InvalidInput("camera resolution must be positive");
    if (!(horizontal_fov_deg > 0.0 && horizontal_fov_deg < 180.0))
      throw InvalidInput("horizontal_fov must be in (0, 180) degrees");
    if (!(max_range > 0.0)) throw InvalidInput("max_range must be positive");
    CameraModel cam;
    cam.width = width;
    cam.height = height;
    cam.horizontal_fov = horizontal_fov_deg;
    cam.max_range = max_range;
    cam.fx = (width / 2.0) / std::tan(deg_to_rad(horizontal_fov_deg) / 2.0);
    const double vfov = 2.0 * std::atan((height / 2.0) / cam.fx);
    cam.fy = (height / 2.0) / std::tan(vfov / 2.0);
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    return cam;
  }

  static CameraModel default_camera() { return from_fov(224, 224, 90.0, 5.0); }

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  void validate() const {
    if (width <= 0 || height <= 0) throw InvalidInput("camera resolution must be positive");
    if (!(max_range > 0.0)) throw InvalidInput("max_range must be positive");
    if (!(fx > 0.0 && fy > 0.0)) throw InvalidInput("focal lengths must be positive");
  }
};

/// Pinhole backprojection of one pixel with known depth into the camera frame.
inline Point3 backproject_pixel(double u, double v, double depth, const CameraModel& cam) {
  if (!(u >= 0.0 && u < cam.width && v >= 0.0 && v < cam.height))
    throw InvalidInput("pixel (" + std::to_string(u) + ", " + std::to_string(v) + ") outside image");
  if (!(depth > 0.0 && depth <= cam.max_range))
    throw InvalidInput("depth " + std::to_string(depth) + " outside (0, max_range]");
  return {(u - cam.cx) * depth / cam.fx, (v - cam.cy) * depth / cam.fy, depth};
}

/// Camera frame (+y down) to agent frame (+y up) through the camera mount pose.
inline Point3 camera_to_agent_point(const Pose& camera_to_agent, const Point3& p_cam) {
  return transform_point(camera_to_agent, Point3{p_cam.x, -p_cam.y, p_cam.z});
}

inline Point3 agent_to_camera_point(const Pose& camera_to_agent, const Point3& p_agent) {
  const Point3 q = transform_point(invert(camera_to_agent), p_agent);
  return {q.x, -q.y, q.z};
}

}  // namespace objdis

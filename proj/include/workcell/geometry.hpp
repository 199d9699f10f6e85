#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace workcell {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Rigid transform in SE(3). The rotation is a unit quaternion, renormalized
/// on construction and composition so long chains do not drift.
struct Pose {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  Pose() = default;
  Pose(const Quat& q, const Vec3& t) : rotation(q.normalized()), translation(t) {}

  static Pose identity() { return {}; }
  static Pose translate(double x, double y, double z) {
    return {Quat::Identity(), Vec3(x, y, z)};
  }
  static Pose translate(const Vec3& t) { return {Quat::Identity(), t}; }
  static Pose rotate_axis(const Vec3& axis, double angle_rad) {
    return {Quat(Eigen::AngleAxisd(angle_rad, axis.normalized())), Vec3::Zero()};
  }
  static Pose rot_z(double angle_rad) { return rotate_axis(Vec3::UnitZ(), angle_rad); }
  /// Roll-pitch-yaw (x-y-z intrinsic, applied yaw*pitch*roll).
  static Pose from_rpy(const Vec3& t, double roll, double pitch, double yaw) {
    Quat q = Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
             Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
             Eigen::AngleAxisd(roll, Vec3::UnitX());
    return {q, t};
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  Pose inverse() const {
    const Quat qi = rotation.conjugate();
    return {qi, qi * (-translation)};
  }

  bool is_approx(const Pose& other, double tol = 1e-9) const;
};

inline Pose compose(const Pose& a, const Pose& b) {
  return {(a.rotation * b.rotation).normalized(),
          a.rotation * b.translation + a.translation};
}

/// Rotation angle of a unit quaternion in [0, pi]; stable near identity.
inline double rotation_angle_rad(const Quat& q) {
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
}

inline bool Pose::is_approx(const Pose& other, double tol) const {
  const Quat dq = rotation.conjugate() * other.rotation;
  return rotation_angle_rad(dq) <= tol &&
         (translation - other.translation).norm() <= tol;
}

/// Motion of a frame expressed in that frame (body-frame delta).
struct RelativeMotion {
  Pose delta;
};

/// Body-frame motion taking pose `a` to pose `b`: compose(a, delta) == b.
inline RelativeMotion relative(const Pose& a, const Pose& b) {
  return {compose(a.inverse(), b)};
}

struct MotionNorms {
  double translation_m = 0.0;
  double rotation_deg = 0.0;
};

inline MotionNorms motion_norms(const RelativeMotion& m) {
  return {m.delta.translation.norm(), rad_to_deg(rotation_angle_rad(m.delta.rotation))};
}

/// Oriented box. Boundary points count as inside.
struct Cuboid {
  Pose pose;
  Vec3 half_extents = Vec3::Zero();

  bool contains(const Vec3& p) const {
    const Vec3 local = pose.rotation.conjugate() * (p - pose.translation);
    return std::abs(local.x()) <= half_extents.x() &&
           std::abs(local.y()) <= half_extents.y() &&
           std::abs(local.z()) <= half_extents.z();
  }

  Cuboid inflated(double margin) const {
    return {pose, half_extents + Vec3::Constant(margin)};
  }

  Vec3 center() const { return pose.translation; }
};

inline bool point_in_cuboid(const Vec3& p, const Cuboid& c) { return c.contains(p); }

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();  // unit norm
};

/// Nearest non-negative entry distance via the slab method in the cuboid
/// frame. A ray starting inside the box reports distance 0.
inline std::optional<double> ray_cuboid_intersect(const Ray& r, const Cuboid& c) {
  const Quat inv = c.pose.rotation.conjugate();
  const Vec3 o = inv * (r.origin - c.pose.translation);
  const Vec3 d = inv * r.direction;

  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-12) {
      if (std::abs(o[i]) > c.half_extents[i]) return std::nullopt;
      continue;
    }
    double t1 = (-c.half_extents[i] - o[i]) / d[i];
    double t2 = (c.half_extents[i] - o[i]) / d[i];
    if (t1 > t2) std::swap(t1, t2);
    t_enter = std::max(t_enter, t1);
    t_exit = std::min(t_exit, t2);
  }
  if (t_exit < t_enter || t_exit < 0.0) return std::nullopt;
  return std::max(t_enter, 0.0);
}

}  // namespace workcell

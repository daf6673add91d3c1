#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dream {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

/// Planar vector in the inertial frame (x east-ish, y north-ish; the task only
/// cares that the frame is fixed).
struct InertialVector {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const InertialVector&, const InertialVector&) = default;
};

/// Planar vector along the UAV body axes: u forward, v left.
struct BodyVector {
  double u = 0.0;
  double v = 0.0;
  friend bool operator==(const BodyVector&, const BodyVector&) = default;
};

/// Maps any finite angle onto (-pi, pi]. Throws std::domain_error otherwise.
double wrap_angle(double a);

/// Position plus heading in the inertial frame. Yaw is counter-clockwise
/// positive, zero along +x, and always stored wrapped.
class Pose {
 public:
  Pose() = default;
  Pose(double x, double y, double z, double yaw);
  Pose(Vec3 position, double yaw);

  double x() const { return position_.x; }
  double y() const { return position_.y; }
  double z() const { return position_.z; }
  double yaw() const { return yaw_; }
  const Vec3& position() const { return position_; }

  Pose with_position(Vec3 p) const { return Pose(p, yaw_); }
  Pose with_yaw(double yaw) const { return Pose(position_, yaw); }
  Pose translated(Vec3 delta) const { return Pose(position_ + delta, yaw_); }

  friend bool operator==(const Pose&, const Pose&) = default;

 private:
  Vec3 position_{};
  double yaw_ = 0.0;
};

InertialVector body_to_inertial(BodyVector vec, double yaw);
BodyVector inertial_to_body(InertialVector vec, double yaw);

/// Rigid transform from the hand to the grabbed object, expressed in the
/// hand frame at grab time.
struct GripOffset {
  Vec3 translation{};
  double yaw = 0.0;
};

GripOffset grip_capture(const Pose& hand, const Pose& object);
Pose grip_apply(const Pose& hand, const GripOffset& grip);

}  // namespace dream

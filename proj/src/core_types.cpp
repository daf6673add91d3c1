#include "dream/core_types.hpp"

#include <string>

namespace dream {
namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::domain_error(std::string("non-finite ") + what);
}

}  // namespace

double wrap_angle(double a) {
  require_finite(a, "angle");
  // remainder() is exact and lands in [-pi, pi]; only -pi needs folding.
  double r = std::remainder(a, kTwoPi);
  if (r <= -kPi) r += kTwoPi;
  return r;
}

Pose::Pose(double x, double y, double z, double yaw) : Pose(Vec3{x, y, z}, yaw) {}

Pose::Pose(Vec3 position, double yaw) : position_(position), yaw_(wrap_angle(yaw)) {
  if (!position_.finite()) throw std::domain_error("non-finite pose position");
}

InertialVector body_to_inertial(BodyVector vec, double yaw) {
  require_finite(vec.u, "body vector");
  require_finite(vec.v, "body vector");
  require_finite(yaw, "yaw");
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {c * vec.u - s * vec.v, s * vec.u + c * vec.v};
}

BodyVector inertial_to_body(InertialVector vec, double yaw) {
  require_finite(vec.x, "inertial vector");
  require_finite(vec.y, "inertial vector");
  require_finite(yaw, "yaw");
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {c * vec.x + s * vec.y, -s * vec.x + c * vec.y};
}

GripOffset grip_capture(const Pose& hand, const Pose& object) {
  const Vec3 d = object.position() - hand.position();
  const BodyVector local = inertial_to_body({d.x, d.y}, hand.yaw());
  return {{local.u, local.v, d.z}, wrap_angle(object.yaw() - hand.yaw())};
}

Pose grip_apply(const Pose& hand, const GripOffset& grip) {
  const InertialVector d = body_to_inertial({grip.translation.x, grip.translation.y}, hand.yaw());
  return Pose(hand.position() + Vec3{d.x, d.y, grip.translation.z}, hand.yaw() + grip.yaw);
}

}  // namespace dream

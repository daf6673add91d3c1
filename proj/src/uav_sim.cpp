#include "dream/uav_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dream {
namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive");
}

void validate_gains(const PidGains& g, const char* axis) {
  if (!(g.kp >= 0 && g.ki >= 0 && g.kd >= 0))
    throw std::invalid_argument(std::string("pid gains for ") + axis + " must be non-negative");
}

double axis_update(PidAxisState& axis, const PidGains& g, const PidConfig& cfg, double error,
                   double derivative_error, double dt) {
  if (std::abs(error) < cfg.integration_band) axis.integral += error * dt;
  axis.integral = std::clamp(axis.integral, -cfg.integral_bound, cfg.integral_bound);
  const double derivative = axis.has_previous ? derivative_error / dt : 0.0;
  axis.previous_error = error;
  axis.has_previous = true;
  return g.kp * error + g.ki * axis.integral + g.kd * derivative;
}

}  // namespace

bool Box3::contains(const Vec3& p) const {
  return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z && p.z <= max.z;
}

Vec3 Box3::clamp(const Vec3& p) const {
  return {std::clamp(p.x, min.x, max.x), std::clamp(p.y, min.y, max.y), std::clamp(p.z, min.z, max.z)};
}

void Limits::validate() const {
  require_positive(max_horizontal_speed, "max_horizontal_speed");
  require_positive(max_vertical_speed, "max_vertical_speed");
  require_positive(max_yaw_rate, "max_yaw_rate");
  if (!volume.min.finite() || !volume.max.finite() || !(volume.min.x < volume.max.x) ||
      !(volume.min.y < volume.max.y) || !(volume.min.z < volume.max.z))
    throw std::invalid_argument("flight volume is degenerate");
}

VelocityCommand clamp_to_limits(VelocityCommand cmd, const Limits& limits) {
  const double h = std::hypot(cmd.vx, cmd.vy);
  if (h > limits.max_horizontal_speed) {
    const double s = limits.max_horizontal_speed / h;
    cmd.vx *= s;
    cmd.vy *= s;
  }
  cmd.vz = std::clamp(cmd.vz, -limits.max_vertical_speed, limits.max_vertical_speed);
  cmd.yaw_rate = std::clamp(cmd.yaw_rate, -limits.max_yaw_rate, limits.max_yaw_rate);
  return cmd;
}

double UavState::horizontal_speed() const { return std::hypot(vx, vy); }

double UavState::speed() const { return std::sqrt(vx * vx + vy * vy + vz * vz); }

UavState UavState::at_rest(const Pose& pose) {
  UavState s;
  s.pose = pose;
  return s;
}

void PidConfig::validate() const {
  validate_gains(x, "x");
  validate_gains(y, "y");
  validate_gains(z, "z");
  validate_gains(yaw, "yaw");
  require_positive(integral_bound, "pid integral_bound");
  require_positive(integration_band, "pid integration_band");
}

void PidState::reset() {
  x = y = z = yaw = PidAxisState{};
}

PidOutput pid_step(const PidState& pid, const Pose& setpoint, const UavState& state, double dt,
                   const Limits& limits) {
  if (!(dt > 0)) throw std::domain_error("pid_step: dt must be positive");
  PidState next = pid;
  const PidConfig& cfg = pid.config;
  const double ex = setpoint.x() - state.pose.x();
  const double ey = setpoint.y() - state.pose.y();
  const double ez = setpoint.z() - state.pose.z();
  const double eyaw = wrap_angle(setpoint.yaw() - state.pose.yaw());

  VelocityCommand cmd;
  cmd.vx = axis_update(next.x, cfg.x, cfg, ex, ex - pid.x.previous_error, dt);
  cmd.vy = axis_update(next.y, cfg.y, cfg, ey, ey - pid.y.previous_error, dt);
  cmd.vz = axis_update(next.z, cfg.z, cfg, ez, ez - pid.z.previous_error, dt);
  cmd.yaw_rate = axis_update(next.yaw, cfg.yaw, cfg, eyaw, wrap_angle(eyaw - pid.yaw.previous_error), dt);
  return {clamp_to_limits(cmd, limits), next};
}

StickInput clamp_sticks(const StickInput& in, bool* was_clamped) {
  auto c = [](double v) { return std::isfinite(v) ? std::clamp(v, -1.0, 1.0) : 0.0; };
  StickInput out{c(in.left_u), c(in.left_v), c(in.right_yaw)};
  if (was_clamped) *was_clamped = !(out == in);
  return out;
}

JoystickController::JoystickController(PidConfig pid, double hold_altitude)
    : hold_altitude_(hold_altitude) {
  altitude_pid_.config = pid;
}

JoystickController::Result JoystickController::step(const StickInput& sticks, const UavState& state,
                                                    double dt, const Limits& limits) {
  Result r;
  const StickInput s = clamp_sticks(sticks, &r.clamped);
  const InertialVector h = body_to_inertial(
      {s.left_u * limits.max_horizontal_speed, s.left_v * limits.max_horizontal_speed}, state.pose.yaw());
  // Only the z channel of the PID is used; x, y and yaw follow the setpoint trivially.
  const Pose hold(state.pose.x(), state.pose.y(), hold_altitude_, state.pose.yaw());
  PidOutput alt = pid_step(altitude_pid_, hold, state, dt, limits);
  altitude_pid_ = alt.state;
  r.command = clamp_to_limits({h.x, h.y, alt.command.vz, s.right_yaw * limits.max_yaw_rate}, limits);
  return r;
}

void PlantParams::validate() const {
  require_positive(tau, "plant tau");
  limits.validate();
}

UavState plant_step(const UavState& state, VelocityCommand cmd, double dt, const PlantParams& params) {
  if (!(dt > 0)) throw std::domain_error("plant_step: dt must be positive");
  cmd = clamp_to_limits(cmd, params.limits);
  const double keep = std::exp(-dt / params.tau);
  auto lag = [keep](double v, double target) { return target + (v - target) * keep; };

  UavState next = state;
  next.vx = lag(state.vx, cmd.vx);
  next.vy = lag(state.vy, cmd.vy);
  next.vz = lag(state.vz, cmd.vz);
  next.yaw_rate = lag(state.yaw_rate, cmd.yaw_rate);

  Vec3 p = state.pose.position() + dt * Vec3{next.vx, next.vy, next.vz};
  const Box3& vol = params.limits.volume;
  if (p.x < vol.min.x || p.x > vol.max.x) next.vx = 0.0;
  if (p.y < vol.min.y || p.y > vol.max.y) next.vy = 0.0;
  if (p.z < vol.min.z || p.z > vol.max.z) next.vz = 0.0;
  p = vol.clamp(p);
  next.pose = Pose(p, state.pose.yaw() + next.yaw_rate * dt);

  // Rotor mix from the realized acceleration: X-quad, order FL, FR, RR, RL.
  const double ax = (next.vx - state.vx) / dt;
  const double ay = (next.vy - state.vy) / dt;
  const double az = (next.vz - state.vz) / dt;
  const double ayaw = (next.yaw_rate - state.yaw_rate) / dt;
  const BodyVector ab = inertial_to_body({ax, ay}, state.pose.yaw());
  constexpr double kHover = 0.5;
  constexpr double kGain = 0.05;
  const double collective = kHover + kGain * az;
  const double pitch = kGain * ab.u;
  const double roll = kGain * ab.v;
  const double yaw = 0.25 * kGain * ayaw;
  auto unit = [](double v) { return std::clamp(v, 0.0, 1.0); };
  next.thrust = {unit(collective - pitch + roll - yaw), unit(collective - pitch - roll + yaw),
                 unit(collective + pitch - roll - yaw), unit(collective + pitch + roll + yaw)};
  return next;
}

}  // namespace dream

#pragma once

#include <array>

#include "dream/core_types.hpp"

namespace dream {

struct Box3 {
  Vec3 min{};
  Vec3 max{};

  bool contains(const Vec3& p) const;
  Vec3 clamp(const Vec3& p) const;
};

struct Limits {
  double max_horizontal_speed = 1.0;  // m/s
  double max_vertical_speed = 0.5;    // m/s
  double max_yaw_rate = 1.5;          // rad/s
  Box3 volume{{-2.5, -3.0, 0.0}, {2.5, 3.0, 2.5}};

  void validate() const;
};

/// Inertial velocity command plus yaw rate.
struct VelocityCommand {
  double vx = 0.0;
  double vy = 0.0;
  double vz = 0.0;
  double yaw_rate = 0.0;

  friend bool operator==(const VelocityCommand&, const VelocityCommand&) = default;
};

/// Horizontal norm, vertical speed and yaw rate clamped to the limits.
VelocityCommand clamp_to_limits(VelocityCommand cmd, const Limits& limits);

struct UavState {
  Pose pose;
  double vx = 0.0;
  double vy = 0.0;
  double vz = 0.0;
  double yaw_rate = 0.0;
  /// Normalized rotor values, synthesized only for log fidelity.
  std::array<double, 4> thrust{0.5, 0.5, 0.5, 0.5};

  double horizontal_speed() const;
  double speed() const;

  static UavState at_rest(const Pose& pose);
};

struct PidGains {
  double kp = 1.2;
  double ki = 0.1;
  double kd = 0.3;
};

/// Per-axis position PID.
///
/// Anti-windup is two-fold: the integrator only accumulates while
/// |error| < integration_band, and the accumulator is clamped to
/// +/- integral_bound.
struct PidConfig {
  PidGains x{};
  PidGains y{};
  PidGains z{};
  PidGains yaw{};
  double integral_bound = 0.5;
  double integration_band = 0.01;

  void validate() const;
};

struct PidAxisState {
  double integral = 0.0;
  double previous_error = 0.0;
  bool has_previous = false;
};

struct PidState {
  PidConfig config{};
  PidAxisState x{};
  PidAxisState y{};
  PidAxisState z{};
  PidAxisState yaw{};

  void reset();
};

struct PidOutput {
  VelocityCommand command;
  PidState state;
};

/// One PID update on the position/yaw error. Yaw error is wrapped. The
/// returned command is already clamped to `limits`. Throws
/// std::domain_error for dt <= 0.
PidOutput pid_step(const PidState& pid, const Pose& setpoint, const UavState& state, double dt,
                   const Limits& limits);

struct StickInput {
  double left_u = 0.0;   // forward
  double left_v = 0.0;   // left
  double right_yaw = 0.0;

  friend bool operator==(const StickInput&, const StickInput&) = default;
};

/// Clamps every stick axis to [-1, 1]; reports whether anything changed.
StickInput clamp_sticks(const StickInput& in, bool* was_clamped = nullptr);

/// Joystick mode: body-frame horizontal velocity and yaw rate from the
/// sticks, altitude held by an internal z-PID at `hold_altitude`.
class JoystickController {
 public:
  JoystickController() = default;
  JoystickController(PidConfig pid, double hold_altitude);

  struct Result {
    VelocityCommand command;
    bool clamped = false;
  };

  Result step(const StickInput& sticks, const UavState& state, double dt, const Limits& limits);

  double hold_altitude() const { return hold_altitude_; }

 private:
  PidState altitude_pid_{};
  double hold_altitude_ = 1.0;
};

struct PlantParams {
  double tau = 0.25;  // first-order velocity lag, s
  Limits limits{};

  void validate() const;
};

/// Kinematic plant: exact first-order velocity lag toward the (clamped)
/// command, semi-implicit Euler position update, flight-volume clamp.
/// Throws std::domain_error for dt <= 0.
UavState plant_step(const UavState& state, VelocityCommand cmd, double dt, const PlantParams& params);

}  // namespace dream

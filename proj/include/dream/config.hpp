#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "dream/json_fields.hpp"
#include "dream/metaphor.hpp"
#include "dream/netlink.hpp"
#include "dream/task_geometry.hpp"
#include "dream/uav_sim.hpp"

namespace dream {

enum class ControlMode { Dream, Joystick };

std::string_view to_string(ControlMode m);
/// Accepts "dream" or "joystick"; throws ConfigError(path) otherwise.
ControlMode parse_mode(const std::string& s, const std::string& path = "mode");

/// Everything the simulated world needs, independent of who drives it.
struct WorldConfig {
  ControlMode mode = ControlMode::Dream;
  TaskGeometry geometry{};
  PlantParams plant{};
  PidConfig pid{};
  ChannelConfig command_channel{};
  ChannelConfig feedback_channel{};
  HitBox hitbox{};
  double dt = 0.01;  // s, one tick for plant, link and command stream

  void validate() const;
};

/// Parameters shared by both scripted pilots so they fly with matched effort.
struct PilotEffort {
  double cruise_speed = 0.8;  // m/s, average hand speed / joystick speed cap
  double noise = 0.0;         // hand tremor (m) or stick noise (stick units), 1 sigma
};

struct DreamPilotConfig {
  double initial_wait = 1.0;    // s at the start before the first leg
  double endpoint_dwell = 3.0;  // s the hand rests at each endpoint
  double keyframe_spacing = 0.1;
  Vec3 grip_offset{0.04, -0.03, 0.05};  // object position in hand frame at grab
  double grip_yaw_offset = 0.3;         // rad
};

struct JoystickPilotConfig {
  double lateral_gain = 1.0;     // stick per meter of waypoint error
  double yaw_gain = 1.0;         // stick per radian of bearing error
  double reaction_delay = 0.2;   // s
  double initial_wait = 1.0;     // s
  double hold_time = 1.0;        // s stopped at a waypoint before heading back
  double arrive_radius = 0.05;   // m
  double arrive_speed = 0.03;    // m/s
};

struct PilotConfig {
  PilotEffort effort{};
  DreamPilotConfig dream{};
  JoystickPilotConfig joystick{};

  void validate() const;
};

struct ScenarioConfig {
  WorldConfig world{};
  StopParams stop{};
  PilotConfig pilot{};
  double duration = 180.0;  // s
  std::optional<std::uint64_t> seed;
  std::string start_wall_time = "1970-01-01T00:00:00Z";

  void validate() const;
};

/// `mode` and `geometry` (all four points) are required; every other
/// section falls back to defaults. Errors name the offending field.
ScenarioConfig scenario_from_json(const Json& j);
Json to_json(const ScenarioConfig& c);

ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Decorrelated 64-bit sub-seed (splitmix64 of seed + stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace dream

#include "dream/config.hpp"

#include <fstream>
#include <sstream>

namespace dream {
namespace {

Json gains_json(const PidGains& g) { return Json{{"kp", g.kp}, {"ki", g.ki}, {"kd", g.kd}}; }

Json channel_json(const ChannelConfig& c) {
  return Json{{"latency_s", c.latency}, {"jitter_s", c.jitter}, {"drop", c.drop}};
}

const Json* find_section(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) return nullptr;
  if (!it->is_object()) throw ConfigError(join_path(path, key), "expected an object");
  return &*it;
}

void read_gains(const Json& pid, const std::string& axis, const std::string& path, PidGains& g) {
  if (const Json* s = find_section(pid, axis, path)) {
    const std::string p = join_path(path, axis);
    read_number_opt(*s, "kp", p, g.kp);
    read_number_opt(*s, "ki", p, g.ki);
    read_number_opt(*s, "kd", p, g.kd);
  }
}

void read_channel(const Json& j, const std::string& key, const std::string& path, ChannelConfig& c) {
  if (const Json* s = find_section(j, key, path)) {
    const std::string p = join_path(path, key);
    read_number_opt(*s, "latency_s", p, c.latency);
    read_number_opt(*s, "jitter_s", p, c.jitter);
    read_number_opt(*s, "drop", p, c.drop);
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(p, e.what());
    }
  }
}

template <typename F>
void rethrow_as_config(const std::string& field, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, e.what());
  }
}

void require_positive(double v, const std::string& field) {
  if (!(v > 0)) throw ConfigError(field, "must be positive");
}

void require_non_negative(double v, const std::string& field) {
  if (!(v >= 0)) throw ConfigError(field, "must be non-negative");
}

}  // namespace

std::string_view to_string(ControlMode m) { return m == ControlMode::Dream ? "dream" : "joystick"; }

ControlMode parse_mode(const std::string& s, const std::string& path) {
  if (s == "dream") return ControlMode::Dream;
  if (s == "joystick") return ControlMode::Joystick;
  throw ConfigError(path, "expected \"dream\" or \"joystick\", got \"" + s + "\"");
}

void WorldConfig::validate() const {
  geometry.validate();
  rethrow_as_config("limits", [&] { plant.validate(); });
  rethrow_as_config("pid", [&] { pid.validate(); });
  rethrow_as_config("channel.command", [&] { command_channel.validate(); });
  rethrow_as_config("channel.feedback", [&] { feedback_channel.validate(); });
  rethrow_as_config("hitbox_half_extents", [&] { hitbox.validate(); });
  require_positive(dt, "dt_s");
  if (!plant.limits.volume.contains(geometry.start) || !plant.limits.volume.contains(geometry.arrival))
    throw ConfigError("geometry", "start and arrival must lie inside the flight volume");
}

void PilotConfig::validate() const {
  require_positive(effort.cruise_speed, "pilot.cruise_speed");
  require_non_negative(effort.noise, "pilot.noise");
  require_non_negative(dream.initial_wait, "pilot.dream.initial_wait_s");
  require_non_negative(dream.endpoint_dwell, "pilot.dream.endpoint_dwell_s");
  require_positive(dream.keyframe_spacing, "pilot.dream.keyframe_spacing_s");
  if (!dream.grip_offset.finite()) throw ConfigError("pilot.dream.grip_offset", "must be finite");
  require_non_negative(joystick.lateral_gain, "pilot.joystick.lateral_gain");
  require_non_negative(joystick.yaw_gain, "pilot.joystick.yaw_gain");
  require_non_negative(joystick.reaction_delay, "pilot.joystick.reaction_delay_s");
  require_non_negative(joystick.initial_wait, "pilot.joystick.initial_wait_s");
  require_non_negative(joystick.hold_time, "pilot.joystick.hold_time_s");
  require_positive(joystick.arrive_radius, "pilot.joystick.arrive_radius");
  require_positive(joystick.arrive_speed, "pilot.joystick.arrive_speed");
}

void ScenarioConfig::validate() const {
  world.validate();
  stop.validate();
  pilot.validate();
  require_positive(duration, "duration_s");
}

ScenarioConfig scenario_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  ScenarioConfig c;
  const Json& mode = require_field(j, "mode", "");
  if (!mode.is_string()) throw ConfigError("mode", "expected a string");
  c.world.mode = parse_mode(mode.get<std::string>());
  c.world.geometry = geometry_from_json(require_field(j, "geometry", ""), "geometry");

  read_number_opt(j, "duration_s", "", c.duration);
  read_number_opt(j, "dt_s", "", c.world.dt);
  if (auto it = j.find("seed"); it != j.end() && !it->is_null()) {
    const bool ok = it->is_number_unsigned() || (it->is_number_integer() && it->get<std::int64_t>() >= 0);
    if (!ok) throw ConfigError("seed", "expected a non-negative integer");
    c.seed = it->get<std::uint64_t>();
  }
  if (auto it = j.find("start_wall_time"); it != j.end()) {
    if (!it->is_string()) throw ConfigError("start_wall_time", "expected a string");
    c.start_wall_time = it->get<std::string>();
  }
  if (const Json* s = find_section(j, "stop", "")) c.stop = stop_params_from_json(*s, "stop");

  if (const Json* s = find_section(j, "limits", "")) {
    Limits& l = c.world.plant.limits;
    read_number_opt(*s, "max_horizontal_speed", "limits", l.max_horizontal_speed);
    read_number_opt(*s, "max_vertical_speed", "limits", l.max_vertical_speed);
    read_number_opt(*s, "max_yaw_rate", "limits", l.max_yaw_rate);
    if (const Json* v = find_section(*s, "volume", "limits")) {
      l.volume.min = read_vec3(*v, "min", "limits.volume");
      l.volume.max = read_vec3(*v, "max", "limits.volume");
    }
  }
  if (const Json* s = find_section(j, "plant", "")) read_number_opt(*s, "tau_s", "plant", c.world.plant.tau);
  if (const Json* s = find_section(j, "pid", "")) {
    read_gains(*s, "x", "pid", c.world.pid.x);
    read_gains(*s, "y", "pid", c.world.pid.y);
    read_gains(*s, "z", "pid", c.world.pid.z);
    read_gains(*s, "yaw", "pid", c.world.pid.yaw);
    read_number_opt(*s, "integral_bound", "pid", c.world.pid.integral_bound);
    read_number_opt(*s, "integration_band", "pid", c.world.pid.integration_band);
  }
  if (const Json* s = find_section(j, "channel", "")) {
    read_channel(*s, "command", "channel", c.world.command_channel);
    read_channel(*s, "feedback", "channel", c.world.feedback_channel);
  }
  if (auto it = j.find("hitbox_half_extents"); it != j.end())
    c.world.hitbox.half_extents = as_vec3(*it, "hitbox_half_extents");

  if (const Json* p = find_section(j, "pilot", "")) {
    read_number_opt(*p, "cruise_speed", "pilot", c.pilot.effort.cruise_speed);
    read_number_opt(*p, "noise", "pilot", c.pilot.effort.noise);
    if (const Json* d = find_section(*p, "dream", "pilot")) {
      DreamPilotConfig& dp = c.pilot.dream;
      read_number_opt(*d, "initial_wait_s", "pilot.dream", dp.initial_wait);
      read_number_opt(*d, "endpoint_dwell_s", "pilot.dream", dp.endpoint_dwell);
      read_number_opt(*d, "keyframe_spacing_s", "pilot.dream", dp.keyframe_spacing);
      if (auto it = d->find("grip_offset"); it != d->end())
        dp.grip_offset = as_vec3(*it, "pilot.dream.grip_offset");
      read_number_opt(*d, "grip_yaw_offset", "pilot.dream", dp.grip_yaw_offset);
    }
    if (const Json* js = find_section(*p, "joystick", "pilot")) {
      JoystickPilotConfig& jp = c.pilot.joystick;
      read_number_opt(*js, "lateral_gain", "pilot.joystick", jp.lateral_gain);
      read_number_opt(*js, "yaw_gain", "pilot.joystick", jp.yaw_gain);
      read_number_opt(*js, "reaction_delay_s", "pilot.joystick", jp.reaction_delay);
      read_number_opt(*js, "initial_wait_s", "pilot.joystick", jp.initial_wait);
      read_number_opt(*js, "hold_time_s", "pilot.joystick", jp.hold_time);
      read_number_opt(*js, "arrive_radius", "pilot.joystick", jp.arrive_radius);
      read_number_opt(*js, "arrive_speed", "pilot.joystick", jp.arrive_speed);
    }
  }
  c.validate();
  return c;
}

Json to_json(const ScenarioConfig& c) {
  const WorldConfig& w = c.world;
  const Limits& l = w.plant.limits;
  Json j{{"mode", std::string(to_string(w.mode))},
         {"geometry", to_json(w.geometry)},
         {"duration_s", c.duration},
         {"dt_s", w.dt}};
  j["seed"] = c.seed ? Json(*c.seed) : Json(nullptr);
  j["start_wall_time"] = c.start_wall_time;
  j["stop"] = to_json(c.stop);
  j["limits"] = Json{{"max_horizontal_speed", l.max_horizontal_speed},
                     {"max_vertical_speed", l.max_vertical_speed},
                     {"max_yaw_rate", l.max_yaw_rate},
                     {"volume", Json{{"min", vec3_json(l.volume.min)}, {"max", vec3_json(l.volume.max)}}}};
  j["plant"] = Json{{"tau_s", w.plant.tau}};
  j["pid"] = Json{{"x", gains_json(w.pid.x)},
                  {"y", gains_json(w.pid.y)},
                  {"z", gains_json(w.pid.z)},
                  {"yaw", gains_json(w.pid.yaw)},
                  {"integral_bound", w.pid.integral_bound},
                  {"integration_band", w.pid.integration_band}};
  j["channel"] = Json{{"command", channel_json(w.command_channel)}, {"feedback", channel_json(w.feedback_channel)}};
  j["hitbox_half_extents"] = vec3_json(w.hitbox.half_extents);
  const PilotConfig& p = c.pilot;
  j["pilot"] = Json{{"cruise_speed", p.effort.cruise_speed},
                    {"noise", p.effort.noise},
                    {"dream", Json{{"initial_wait_s", p.dream.initial_wait},
                                   {"endpoint_dwell_s", p.dream.endpoint_dwell},
                                   {"keyframe_spacing_s", p.dream.keyframe_spacing},
                                   {"grip_offset", vec3_json(p.dream.grip_offset)},
                                   {"grip_yaw_offset", p.dream.grip_yaw_offset}}},
                    {"joystick", Json{{"lateral_gain", p.joystick.lateral_gain},
                                      {"yaw_gain", p.joystick.yaw_gain},
                                      {"reaction_delay_s", p.joystick.reaction_delay},
                                      {"initial_wait_s", p.joystick.initial_wait},
                                      {"hold_time_s", p.joystick.hold_time},
                                      {"arrive_radius", p.joystick.arrive_radius},
                                      {"arrive_speed", p.joystick.arrive_speed}}}};
  return j;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  Json j;
  try {
    j = Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace dream

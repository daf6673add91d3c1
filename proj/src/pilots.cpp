#include "dream/pilots.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dream/task_metrics.hpp"
#include "dream/version.hpp"

namespace dream {
namespace {

double standard_normal(std::mt19937_64& rng) {
  // Box-Muller on the portable uniform source.
  const double u1 = 1.0 - unit_uniform(rng);
  const double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double minimum_jerk(double s) { return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s); }

Pose hand_for(const Pose& object, const GripOffset& grip) {
  const double hand_yaw = wrap_angle(object.yaw() - grip.yaw);
  const InertialVector d = body_to_inertial({grip.translation.x, grip.translation.y}, hand_yaw);
  return Pose(object.position() - Vec3{d.x, d.y, grip.translation.z}, hand_yaw);
}

}  // namespace

void HandScript::validate() const {
  if (keys.empty()) throw std::invalid_argument("hand script is empty");
  for (std::size_t i = 1; i < keys.size(); ++i) {
    if (!(keys[i].t > keys[i - 1].t))
      throw std::invalid_argument("hand script keyframe times must strictly increase");
  }
}

HandInput hand_at(const HandScript& script, double t) {
  if (script.keys.empty()) throw std::invalid_argument("hand_at: empty script");
  const auto& keys = script.keys;
  if (t <= keys.front().t) return {keys.front().hand, keys.front().take_pressed};
  if (t >= keys.back().t) return {keys.back().hand, keys.back().take_pressed};
  auto next = std::upper_bound(keys.begin(), keys.end(), t,
                               [](double v, const HandKeyframe& k) { return v < k.t; });
  const HandKeyframe& b = *next;
  const HandKeyframe& a = *(next - 1);
  if (t == a.t) return {a.hand, a.take_pressed};
  const double s = (t - a.t) / (b.t - a.t);
  const Vec3 p = a.hand.position() + s * (b.hand.position() - a.hand.position());
  const double yaw = a.hand.yaw() + s * wrap_angle(b.hand.yaw() - a.hand.yaw());
  return {Pose(p, yaw), a.take_pressed};
}

HandScript make_dream_hand_script(const TaskGeometry& geom, const PilotConfig& pilot, double duration,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const DreamPilotConfig& cfg = pilot.dream;
  const GripOffset grip{cfg.grip_offset, wrap_angle(cfg.grip_yaw_offset)};
  auto object_at = [&](const Vec3& p) { return Pose(p, reference_yaw(p, geom.target)); };
  auto tremor = [&](Pose hand) {
    if (pilot.effort.noise <= 0) return hand;
    const double n = pilot.effort.noise;
    return hand.translated({n * standard_normal(rng), n * standard_normal(rng), n * standard_normal(rng)});
  };

  HandScript script;
  const Pose rest = hand_for(object_at(geom.start), grip);
  constexpr double kPressAt = 0.3;
  script.keys.push_back({0.0, rest, false});
  script.keys.push_back({kPressAt, rest, true});
  double t = std::max(cfg.initial_wait, kPressAt + cfg.keyframe_spacing);
  script.keys.push_back({t, rest, true});

  Vec3 from = geom.start;
  Vec3 to = geom.arrival;
  const double leg = std::hypot(to.x - from.x, to.y - from.y, to.z - from.z) / pilot.effort.cruise_speed;
  const auto steps = static_cast<std::size_t>(std::ceil(leg / cfg.keyframe_spacing));
  while (t < duration) {
    for (std::size_t k = 1; k <= steps; ++k) {
      const double s = minimum_jerk(static_cast<double>(k) / static_cast<double>(steps));
      const Pose hand = hand_for(object_at(from + s * (to - from)), grip);
      script.keys.push_back({t + leg * static_cast<double>(k) / static_cast<double>(steps),
                             k == steps ? hand : tremor(hand), true});
    }
    t += leg;
    if (cfg.endpoint_dwell > 0) {
      t += cfg.endpoint_dwell;
      script.keys.push_back({t, script.keys.back().hand, true});
    }
    std::swap(from, to);
  }
  script.validate();
  return script;
}

JoystickPilot::JoystickPilot(const TaskGeometry& geom, const PilotConfig& pilot, const Limits& limits,
                             std::uint64_t seed)
    : geom_(geom), cfg_(pilot.joystick), effort_(pilot.effort), limits_(limits), rng_(seed) {}

StickInput JoystickPilot::joystick_at(const UavState& observed, double t) {
  constexpr double kEps = 1e-9;
  history_.push_back({t, observed});
  while (history_.size() > 1 && history_[1].t <= t - cfg_.reaction_delay + kEps) history_.pop_front();
  const UavState& seen = history_.front().state;
  const double dt = std::max(0.0, t - last_t_);
  last_t_ = t;

  const bool waiting = t < cfg_.initial_wait;
  const Vec3 waypoint = waiting ? geom_.start : (heading_to_arrival_ ? geom_.arrival : geom_.start);
  const double ex = waypoint.x - seen.pose.x();
  const double ey = waypoint.y - seen.pose.y();
  const double dist = std::hypot(ex, ey);

  if (!waiting) {
    if (dist < cfg_.arrive_radius && seen.horizontal_speed() < cfg_.arrive_speed) {
      hold_ += dt;
    } else {
      hold_ = 0.0;
    }
    if (hold_ >= cfg_.hold_time - kEps) {
      heading_to_arrival_ = !heading_to_arrival_;
      hold_ = 0.0;
      ++legs_;
    }
  }

  double sx = cfg_.lateral_gain * ex;
  double sy = cfg_.lateral_gain * ey;
  const double cap = std::min(1.0, effort_.cruise_speed / limits_.max_horizontal_speed);
  const double norm = std::hypot(sx, sy);
  if (norm > cap) {
    sx *= cap / norm;
    sy *= cap / norm;
  }
  const BodyVector left = inertial_to_body({sx, sy}, seen.pose.yaw());

  StickInput out;
  out.left_u = left.u;
  out.left_v = left.v;
  const double bearing_error = wrap_angle(reference_yaw(seen.pose.position(), geom_.target) - seen.pose.yaw());
  out.right_yaw = cfg_.yaw_gain * bearing_error;
  if (effort_.noise > 0) {
    out.left_u += effort_.noise * standard_normal(rng_);
    out.left_v += effort_.noise * standard_normal(rng_);
    out.right_yaw += effort_.noise * standard_normal(rng_);
  }
  return clamp_sticks(out);
}

Json scenario_manifest(const ScenarioConfig& config, std::uint64_t seed) {
  ScenarioConfig c = config;
  c.seed = seed;
  return Json{{"generator", "simulate"}, {"code_version", kVersion}, {"seed", seed}, {"config", to_json(c)}};
}

ScenarioResult run_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  ScenarioResult result;
  result.seed = seed;
  World world(config.world, seed);

  FlightLog& log = result.log;
  log.header.manifest = scenario_manifest(config, seed);
  log.header.geometry = config.world.geometry;
  log.header.start_wall_time = config.start_wall_time;
  log.samples.push_back(world.sample());

  const auto ticks = static_cast<std::size_t>(std::llround(config.duration / config.world.dt));
  const std::uint64_t pilot_seed = derive_seed(seed, 3);
  const bool dream_mode = config.world.mode == ControlMode::Dream;
  HandScript script;
  std::optional<JoystickPilot> joystick;
  if (dream_mode) {
    script = make_dream_hand_script(config.world.geometry, config.pilot, config.duration, pilot_seed);
  } else {
    joystick.emplace(config.world.geometry, config.pilot, config.world.plant.limits, pilot_seed);
  }

  for (std::size_t k = 0; k < ticks; ++k) {
    const double t = world.time();
    OperatorInput input;
    if (dream_mode) {
      input.hand = hand_at(script, t);
    } else {
      input.sticks = joystick->joystick_at(world.ruav(), t);
    }
    TickOutcome out = world.tick(input);
    for (auto& e : out.events) log.events.push_back(std::move(e));
    log.samples.push_back(world.sample());
  }
  result.ticks = ticks;
  return result;
}

}  // namespace dream

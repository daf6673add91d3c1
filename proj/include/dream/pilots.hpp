#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "dream/config.hpp"
#include "dream/logstore.hpp"
#include "dream/uav_sim.hpp"
#include "dream/world.hpp"

namespace dream {

struct HandKeyframe {
  double t = 0.0;
  Pose hand;
  bool take_pressed = false;
};

/// Piecewise-linear hand trajectory: linear in position, shortest arc in
/// yaw. The button state of an interval is that of its left keyframe.
struct HandScript {
  std::vector<HandKeyframe> keys;

  /// Throws std::invalid_argument on empty scripts or non-increasing times.
  void validate() const;
  double start_time() const { return keys.front().t; }
  double end_time() const { return keys.back().t; }
};

/// Clamped to the script span. Throws std::invalid_argument on an empty script.
HandInput hand_at(const HandScript& script, double t);

/// A competent operator: grabs the virtual UAV, then shuttles it S -> A -> S
/// with a minimum-jerk profile, keeping the nose on the target, resting
/// `endpoint_dwell` at each end.
HandScript make_dream_hand_script(const TaskGeometry& geom, const PilotConfig& pilot, double duration,
                                  std::uint64_t seed);

/// Closed-loop stand-in for a joystick pilot watching the UAV directly.
///
/// It perceives the UAV `reaction_delay` late, drives toward the current
/// endpoint with a proportional law converted to the body frame, and keeps
/// the nose on the target with a proportional yaw law.
class JoystickPilot {
 public:
  JoystickPilot(const TaskGeometry& geom, const PilotConfig& pilot, const Limits& limits,
                std::uint64_t seed);

  StickInput joystick_at(const UavState& observed, double t);

  std::size_t legs_completed() const { return legs_; }

 private:
  struct Observation {
    double t;
    UavState state;
  };

  TaskGeometry geom_;
  JoystickPilotConfig cfg_;
  PilotEffort effort_;
  Limits limits_;
  std::mt19937_64 rng_;
  std::deque<Observation> history_;
  bool heading_to_arrival_ = true;
  double hold_ = 0.0;
  double last_t_ = 0.0;
  std::size_t legs_ = 0;
};

struct ScenarioResult {
  FlightLog log;
  std::uint64_t seed = 0;
  std::size_t ticks = 0;
};

/// Fixed-step headless run at the world dt. The manifest embedded in the
/// log header carries the full config, seed and code version.
ScenarioResult run_scenario(const ScenarioConfig& config, std::uint64_t seed);

/// Header manifest for a run.
Json scenario_manifest(const ScenarioConfig& config, std::uint64_t seed);

}  // namespace dream

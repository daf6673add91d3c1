#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dream/config.hpp"
#include "dream/logstore.hpp"
#include "dream/metaphor.hpp"
#include "dream/netlink.hpp"
#include "dream/uav_sim.hpp"

namespace dream {

struct HandInput {
  Pose hand;
  bool take_pressed = false;
};

/// Latest operator input; absent fields hold their previous value.
struct OperatorInput {
  std::optional<HandInput> hand;
  std::optional<StickInput> sticks;
};

/// Message on the control-room -> UAV link.
struct CommandMessage {
  double stamp = 0.0;
  ControlMode mode = ControlMode::Dream;
  Pose setpoint;      // DrEAM mode
  StickInput sticks;  // joystick mode
};

struct TickOutcome {
  std::vector<LogEvent> events;
  bool sticks_clamped = false;
};

/// One simulated control room + link + flight room.
///
/// Tick order: operator input -> metaphor (or sticks) -> command link ->
/// UAV (zero-order hold on the last received command, PID or joystick
/// law, plant) -> feedback link -> phantom.
class World {
 public:
  World(WorldConfig cfg, std::uint64_t seed);

  TickOutcome tick(const OperatorInput& input);

  const WorldConfig& config() const { return cfg_; }
  ControlMode mode() const { return cfg_.mode; }
  std::uint64_t tick_count() const { return ticks_; }
  double time() const { return static_cast<double>(ticks_) * cfg_.dt; }

  const InteractionState& interaction() const { return interaction_; }
  const PhantomState& phantom() const { return phantom_; }
  /// Pose shown as the virtual UAV; in joystick mode it mirrors the phantom.
  Pose vuav_pose() const;
  VisualState visual() const;
  double speed_intensity() const;

  /// True flight-room state. Logged, never sent to operators.
  const UavState& ruav() const { return ruav_; }
  LogSample sample() const;

  const Channel<CommandMessage>& command_channel() const { return command_; }
  const Channel<PoseFeedback>& feedback_channel() const { return feedback_; }
  Channel<CommandMessage>& command_channel() { return command_; }
  Channel<PoseFeedback>& feedback_channel() { return feedback_; }

  Pose initial_pose() const;

 private:
  WorldConfig cfg_;
  std::uint64_t ticks_ = 0;
  InteractionState interaction_;
  HandInput last_hand_;
  StickInput last_sticks_{};
  UavState ruav_;
  PidState pid_;
  JoystickController joystick_;
  Channel<CommandMessage> command_;
  Channel<PoseFeedback> feedback_;
  PhantomState phantom_;
  CommandMessage held_;
};

}  // namespace dream

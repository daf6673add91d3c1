#pragma once

#include <optional>
#include <string_view>

#include "dream/core_types.hpp"

namespace dream {

enum class InteractionMode { Free, Taken };
enum class VisualState { CanBeTaken, CannotBeTaken, IsTaken };

std::string_view to_string(VisualState v);

/// Axis-aligned grab volume centered on the virtual UAV.
struct HitBox {
  Vec3 half_extents{0.15, 0.15, 0.15};

  void validate() const;
};

/// Grab/release automaton of the virtual UAV.
///
/// `grip` is engaged exactly when `mode == Taken`. `button_was_pressed` keeps
/// the previous button sample so a grab only starts on a press edge.
struct InteractionState {
  InteractionMode mode = InteractionMode::Free;
  std::optional<GripOffset> grip;
  Pose vuav;
  VisualState visual = VisualState::CannotBeTaken;
  bool button_was_pressed = false;

  static InteractionState at(const Pose& vuav);
};

/// Boundary-inclusive containment of the hand in the box centered at `vuav`.
bool hit_test(const Vec3& hand, const Pose& vuav, const HitBox& box);

VisualState visual_state(const InteractionState& state, const Pose& hand, const HitBox& box);

InteractionState step_interaction(const InteractionState& state, const Pose& hand, bool take_pressed,
                                  const HitBox& box = {});

/// Clamped linear speed-to-intensity map. Throws std::invalid_argument when
/// max_speed is not positive.
double speed_feedback(double speed, double max_speed);

}  // namespace dream

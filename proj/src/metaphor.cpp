#include "dream/metaphor.hpp"

#include <algorithm>
#include <stdexcept>

namespace dream {

std::string_view to_string(VisualState v) {
  switch (v) {
    case VisualState::CanBeTaken: return "can_be_taken";
    case VisualState::CannotBeTaken: return "cannot_be_taken";
    case VisualState::IsTaken: return "is_taken";
  }
  return "unknown";
}

void HitBox::validate() const {
  if (!(half_extents.x > 0 && half_extents.y > 0 && half_extents.z > 0) || !half_extents.finite())
    throw std::invalid_argument("hit box half-extents must be positive and finite");
}

InteractionState InteractionState::at(const Pose& vuav) {
  InteractionState s;
  s.vuav = vuav;
  return s;
}

bool hit_test(const Vec3& hand, const Pose& vuav, const HitBox& box) {
  const Vec3 d = hand - vuav.position();
  return std::abs(d.x) <= box.half_extents.x && std::abs(d.y) <= box.half_extents.y &&
         std::abs(d.z) <= box.half_extents.z;
}

VisualState visual_state(const InteractionState& state, const Pose& hand, const HitBox& box) {
  if (state.mode == InteractionMode::Taken) return VisualState::IsTaken;
  return hit_test(hand.position(), state.vuav, box) ? VisualState::CanBeTaken
                                                    : VisualState::CannotBeTaken;
}

InteractionState step_interaction(const InteractionState& state, const Pose& hand, bool take_pressed,
                                  const HitBox& box) {
  InteractionState next = state;
  next.button_was_pressed = take_pressed;

  if (state.mode == InteractionMode::Free) {
    const bool press_edge = take_pressed && !state.button_was_pressed;
    if (press_edge && hit_test(hand.position(), state.vuav, box)) {
      next.mode = InteractionMode::Taken;
      next.grip = grip_capture(hand, state.vuav);
      // No teleport: vuav stays where it was at the grab instant.
    }
  } else if (take_pressed) {
    next.vuav = grip_apply(hand, *state.grip);
  } else {
    next.mode = InteractionMode::Free;
    next.grip.reset();
  }

  next.visual = visual_state(next, hand, box);
  return next;
}

double speed_feedback(double speed, double max_speed) {
  if (!(max_speed > 0) || !std::isfinite(max_speed))
    throw std::invalid_argument("speed feedback max_speed must be positive");
  if (!(speed > 0)) return 0.0;
  return std::min(1.0, speed / max_speed);
}

}  // namespace dream

#include <doctest.h>

#include <random>

#include "dream/metaphor.hpp"

using namespace dream;

namespace {

bool same_pose(const Pose& a, const Pose& b) { return a == b; }

/// Invariants tying mode, grip and visual state together.
void check_invariants(const InteractionState& s, const Pose& hand, const HitBox& box) {
  REQUIRE((s.mode == InteractionMode::Taken) == s.grip.has_value());
  REQUIRE((s.mode == InteractionMode::Taken) == (s.visual == VisualState::IsTaken));
  if (s.mode == InteractionMode::Free)
    REQUIRE((s.visual == VisualState::CanBeTaken) == hit_test(hand.position(), s.vuav, box));
}

}  // namespace

TEST_CASE("hit_test is boundary inclusive") {
  const HitBox box;
  const Pose vuav(1, 2, 1, 0.4);
  CHECK(hit_test({1, 2, 1}, vuav, box));
  CHECK(hit_test({1.15, 2, 1}, vuav, box));
  CHECK(hit_test({1, 2 - 0.15, 1 + 0.15}, vuav, box));
  CHECK_FALSE(hit_test({1.15 + 1e-9, 2, 1}, vuav, box));
  CHECK_FALSE(hit_test({1, 2, 1 - 0.15 - 1e-9}, vuav, box));
}

TEST_CASE("HitBox validation") {
  CHECK_NOTHROW(HitBox{}.validate());
  CHECK_THROWS(HitBox{{0.0, 0.1, 0.1}}.validate());
  CHECK_THROWS(HitBox{{0.1, -0.1, 0.1}}.validate());
}

TEST_CASE("visual state") {
  const HitBox box;
  InteractionState s = InteractionState::at(Pose(0, 0, 1, 0));
  CHECK(visual_state(s, Pose(0, 0, 1, 0), box) == VisualState::CanBeTaken);
  CHECK(visual_state(s, Pose(1, 0, 1, 0), box) == VisualState::CannotBeTaken);
  s = step_interaction(s, Pose(0, 0, 1, 0), true, box);
  CHECK(s.mode == InteractionMode::Taken);
  CHECK(visual_state(s, Pose(3, 3, 3, 0), box) == VisualState::IsTaken);
  CHECK(to_string(VisualState::CanBeTaken) == "can_be_taken");
  CHECK(to_string(VisualState::CannotBeTaken) == "cannot_be_taken");
  CHECK(to_string(VisualState::IsTaken) == "is_taken");
}

TEST_CASE("grab, drag and release") {
  const HitBox box;
  const Pose start(0, -2, 1, 0.3);
  InteractionState s = InteractionState::at(start);
  const Pose hand(0.05, -1.95, 1.02, -0.2);

  s = step_interaction(s, hand, true, box);
  REQUIRE(s.mode == InteractionMode::Taken);
  CHECK(same_pose(s.vuav, start));

  s = step_interaction(s, hand.translated({1, 0, 0}), true, box);
  CHECK(s.vuav.x() == doctest::Approx(start.x() + 1).epsilon(1e-12));
  CHECK(s.vuav.y() == doctest::Approx(start.y()).epsilon(1e-12));
  CHECK(s.vuav.z() == doctest::Approx(start.z()).epsilon(1e-12));
  CHECK(s.vuav.yaw() == doctest::Approx(start.yaw()).epsilon(1e-12));

  const Pose released_at = s.vuav;
  s = step_interaction(s, hand.translated({1, 0, 0}), false, box);
  CHECK(s.mode == InteractionMode::Free);
  CHECK(same_pose(s.vuav, released_at));
  s = step_interaction(s, hand.translated({-2, 1, 0}), false, box);
  CHECK(same_pose(s.vuav, released_at));
}

TEST_CASE("holding the button while sweeping into the box does not grab") {
  const HitBox box;
  InteractionState s = InteractionState::at(Pose(0, 0, 1, 0));
  s = step_interaction(s, Pose(1, 0, 1, 0), true, box);
  CHECK(s.mode == InteractionMode::Free);
  s = step_interaction(s, Pose(0, 0, 1, 0), true, box);
  CHECK(s.mode == InteractionMode::Free);
  s = step_interaction(s, Pose(0, 0, 1, 0), false, box);
  s = step_interaction(s, Pose(0, 0, 1, 0), true, box);
  CHECK(s.mode == InteractionMode::Taken);
}

TEST_CASE("exhaustive transitions over (mode, hit, button)") {
  const HitBox box;
  const Pose vuav(0.3, 0.4, 1.0, 1.0);
  const Pose inside(0.35, 0.38, 1.05, -0.5);
  const Pose outside(2.0, 0.4, 1.0, 0.0);
  int cases = 0;
  for (bool taken : {false, true}) {
    for (bool hit : {false, true}) {
      for (bool pressed : {false, true}) {
        ++cases;
        CAPTURE(taken);
        CAPTURE(hit);
        CAPTURE(pressed);
        InteractionState s = InteractionState::at(vuav);
        if (taken) s = step_interaction(s, inside, true, box);
        REQUIRE((s.mode == InteractionMode::Taken) == taken);
        const Pose hand = hit ? inside : outside;
        // Hand moves while the button state is applied.
        const InteractionState next = step_interaction(s, hand, pressed, box);
        check_invariants(next, hand, box);
        if (!taken && !pressed) {
          CHECK(next.mode == InteractionMode::Free);
          CHECK(same_pose(next.vuav, vuav));
        } else if (!taken && pressed) {
          CHECK(next.mode == (hit ? InteractionMode::Taken : InteractionMode::Free));
          CHECK(same_pose(next.vuav, vuav));  // no teleport at the grab instant
        } else if (taken && pressed) {
          CHECK(next.mode == InteractionMode::Taken);
          const Pose expected = grip_apply(hand, *s.grip);
          CHECK(same_pose(next.vuav, expected));
        } else {
          CHECK(next.mode == InteractionMode::Free);
          CHECK(same_pose(next.vuav, s.vuav));
        }
      }
    }
  }
  CHECK(cases == 8);
}

TEST_CASE("random fuzz keeps no-teleport and no-motion-while-free") {
  const HitBox box;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> step(-0.08, 0.08), yaw(-0.2, 0.2);
  std::bernoulli_distribution flip(0.2);
  InteractionState s = InteractionState::at(Pose(0, 0, 1, 0));
  Pose hand(0.02, 0.0, 1.0, 0.0);
  bool button = false;
  int grabs = 0;
  for (int i = 0; i < 1000; ++i) {
    hand = Pose(hand.x() + step(rng), hand.y() + step(rng), hand.z() + step(rng), hand.yaw() + yaw(rng));
    // Drift the hand back toward the object so grabs actually happen.
    if (flip(rng)) hand = hand.with_position(s.vuav.position() + Vec3{step(rng), step(rng), step(rng)});
    if (flip(rng)) button = !button;
    const InteractionState next = step_interaction(s, hand, button, box);
    check_invariants(next, hand, box);
    if (s.mode == InteractionMode::Free) {
      REQUIRE(same_pose(next.vuav, s.vuav));  // covers both grab instant and free motion
      if (next.mode == InteractionMode::Taken) ++grabs;
    }
    if (!button) REQUIRE(next.mode == InteractionMode::Free);
    s = next;
  }
  CHECK(grabs > 0);
}

TEST_CASE("speed feedback is clamped linear") {
  CHECK(speed_feedback(0.0, 1.0) == 0.0);
  CHECK(speed_feedback(1.0, 1.0) == 1.0);
  CHECK(speed_feedback(0.5, 1.0) == 0.5);
  CHECK(speed_feedback(3.0, 1.0) == 1.0);
  CHECK_THROWS_AS(speed_feedback(0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(speed_feedback(0.5, -1.0), std::invalid_argument);
  double prev = -1;
  for (int i = 0; i <= 200; ++i) {
    const double v = speed_feedback(i * 0.01, 1.5);
    REQUIRE(v >= prev);
    prev = v;
  }
}

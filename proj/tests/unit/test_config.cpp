#include <doctest.h>

#include <fstream>
#include <set>

#include "dream/config.hpp"
#include "support.hpp"

using namespace dream;

namespace {

Json minimal() {
  return Json::parse(R"({
    "mode": "dream",
    "geometry": {"start": [0, -2, 1], "checkpoint": [0, 0, 1], "arrival": [0, 2, 1], "target": [5, 0, 1]}
  })");
}

std::string failing_field(const Json& j) {
  try {
    scenario_from_json(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

}  // namespace

TEST_CASE("minimal config takes defaults") {
  const ScenarioConfig c = scenario_from_json(minimal());
  CHECK(c.world.mode == ControlMode::Dream);
  CHECK(c.world.dt == 0.01);
  CHECK(c.duration == 180.0);
  CHECK(!c.seed);
  CHECK(c.world.geometry.target == Vec3{5, 0, 1});
}

TEST_CASE("config round trips through JSON") {
  Json j = minimal();
  j["mode"] = "joystick";
  j["seed"] = 42;
  j["channel"] = Json{{"command", {{"latency_s", 0.1}, {"jitter_s", 0.02}, {"drop", 0.1}}}};
  j["pilot"] = Json{{"cruise_speed", 0.6}, {"joystick", {{"reaction_delay_s", 0.4}}}};
  const ScenarioConfig c = scenario_from_json(j);
  CHECK(c.world.mode == ControlMode::Joystick);
  CHECK(*c.seed == 42);
  CHECK(c.world.command_channel.latency == 0.1);
  CHECK(c.world.command_channel.drop == 0.1);
  CHECK(c.pilot.effort.cruise_speed == 0.6);
  CHECK(c.pilot.joystick.reaction_delay == 0.4);
  const ScenarioConfig again = scenario_from_json(to_json(c));
  CHECK(to_json(again) == to_json(c));
}

TEST_CASE("config errors name the field") {
  SUBCASE("required fields") {
    Json j = minimal();
    j.erase("mode");
    CHECK(failing_field(j) == "mode");
    j = minimal();
    j.erase("geometry");
    CHECK(failing_field(j) == "geometry");
    j = minimal();
    j["geometry"].erase("target");
    CHECK(failing_field(j) == "geometry.target");
  }
  SUBCASE("bad values") {
    Json j = minimal();
    j["mode"] = "mouse";
    CHECK(failing_field(j) == "mode");
    j = minimal();
    j["geometry"]["start"] = Json::array({0, 1});
    CHECK(failing_field(j) == "geometry.start");
    j = minimal();
    j["channel"] = Json{{"feedback", {{"drop", 1.0}}}};
    CHECK(failing_field(j) == "channel.feedback");
    j = minimal();
    j["channel"] = Json{{"command", {{"latency_s", "slow"}}}};
    CHECK(failing_field(j) == "channel.command.latency_s");
    j = minimal();
    j["duration_s"] = -1;
    CHECK(failing_field(j) == "duration_s");
    j = minimal();
    j["seed"] = -3;
    CHECK(failing_field(j) == "seed");
    j = minimal();
    j["pilot"] = Json{{"joystick", {{"yaw_gain", -1}}}};
    CHECK(failing_field(j) == "pilot.joystick.yaw_gain");
    j = minimal();
    j["geometry"]["arrival"] = j["geometry"]["start"];
    CHECK(failing_field(j).rfind("geometry", 0) == 0);
  }
  SUBCASE("not an object") { CHECK(failing_field(Json::array()) == "<root>"); }
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"dream.json", "joystick.json"}) {
    const ScenarioConfig c = load_scenario(std::filesystem::path(DREAM_SOURCE_DIR) / "configs" / name);
    CHECK(c.seed);
    CHECK(c.world.command_channel.latency == 0.06);
  }
  CHECK_THROWS(load_scenario("/nonexistent/config.json"));
  testsupport::TempDir dir;
  const auto bad = dir.path() / "bad.json";
  std::ofstream(bad) << "{ not json";
  CHECK_THROWS(load_scenario(bad));
}

TEST_CASE("derived seeds") {
  CHECK(derive_seed(7, 1) == derive_seed(7, 1));
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 50; ++s)
    for (std::uint64_t k = 0; k < 4; ++k) seen.insert(derive_seed(s, k));
  CHECK(seen.size() == 200);
}

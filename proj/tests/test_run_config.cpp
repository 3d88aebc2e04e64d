#include <doctest.h>

#include <filesystem>

#include "safeik/run_config.hpp"
#include "safeik/text_document.hpp"

using namespace safeik;

namespace {

int error_line(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

std::string error_field(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ParseError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("parse_run_config: every keyword") {
  const RunConfig c = parse_run_config(
      "# comment\n"
      "robot arm.robot\n"
      "scene shelf\n"
      "dt 0.01\n"
      "duration 12.5\n"
      "first_seed 3\n"
      "home 0 0.1 0 -1 0 0.5 0\n"
      "weights track_pos 2 track_ori 0.25 vel 1e-4 col 1e-5\n"
      "cbf epsilon 0.02 gamma 0.5 beta 10 temperature 150\n"
      "penalty epsilon 0.04 delta 1e-3\n"
      "manipulability threshold 0.01 cap 300 temperature 0.02\n"
      "self_collision delta 2e-3 separation 3\n"
      "solve max_iterations 40 tolerance 1e-7 kkt 1e-8 step_tolerance 1e-11 time_budget 0.01\n"
      "model_hessian off\n"
      "obstacle p0 0 0 0 p1 0 0 1 radius 0.05\n"
      "obstacle p0 1 0 0 p1 1 0 1 radius 0.05 axis 0 2 0 amplitude 0.05 period 20 phase 1\n"
      "waypoint t 0 xyz 0.5 0 0.4 quat 1 0 0 0\n"
      "waypoint t 2 xyz 0.5 0.1 0.4 quat 1 0 0 0\n"
      "human t 0 xyz 0.5 0 0.5 quat 0 0 1 0\n"
      "arbitration sigmoid slope -6 scale 0.1 bias 0.5\n",
      "/cfg");
  CHECK(c.robot_path == "/cfg/arm.robot");
  CHECK(c.scene == SceneKind::shelf);
  CHECK(c.dt == 0.01);
  CHECK(*c.duration == 12.5);
  CHECK(c.first_seed == 3);
  CHECK(c.home->size() == 7);
  CHECK((*c.home)[3] == -1.0);
  CHECK(c.params.weights.w_track_pos == 2.0);
  CHECK(c.params.weights.w_track_ori == 0.25);
  CHECK(c.params.weights.w_vel == 1e-4);
  CHECK(c.params.weights.w_col == 1e-5);
  CHECK(c.params.weights.w_acc == ObjectiveWeights{}.w_acc);
  CHECK(c.params.cbf.epsilon == 0.02);
  CHECK(c.params.cbf.temperature == 150.0);
  CHECK(c.params.penalty.delta == 1e-3);
  CHECK(c.params.manipulability.condition_number_cap == 300.0);
  CHECK(c.params.self_collision.min_link_separation == 3);
  CHECK(c.params.solve.max_iterations == 40);
  CHECK(*c.params.solve.time_budget == 0.01);
  CHECK_FALSE(c.params.model_hessian);
  REQUIRE(c.obstacles.size() == 2);
  CHECK_FALSE(c.obstacles[0].motion);
  CHECK(c.obstacles[1].motion->axis() == Vec3::UnitY());
  CHECK(c.waypoints.size() == 2);
  CHECK(c.human_waypoints.size() == 1);
  CHECK(c.arbitration.mode == ArbitrationMode::sigmoid);
  CHECK(c.arbitration.slope == -6.0);

  const RunConfig f = parse_run_config("arbitration fixed 0.7\n");
  CHECK(f.arbitration.mode == ArbitrationMode::fixed);
  CHECK(f.arbitration.fixed_alpha == 0.7);
}

TEST_CASE("parse_run_config: errors carry line and field") {
  CHECK(error_line("scene shelf\nscene kitchen\n") == 2);
  CHECK(error_field("dt -1\n") == "dt");
  CHECK(error_field("bogus 1\n") == "bogus");
  CHECK(error_field("obstacle p0 0 0 0 p1 0 0 1\n") == "radius");
  CHECK(error_field("obstacle p0 0 0 0 p1 0 0 1 radius 0.1 axis 1 0 0 amplitude 0.1\n") == "period");
  CHECK(error_line("\n\nobstacle p0 0 0 0 p1 0 0 1 radius 0.1 axis 1 0 0 amplitude 1 period 1\n") ==
        3);
  CHECK(error_field("waypoint t 0 xyz 0 0 0 quat 2 0 0 0\n") == "quat");
  CHECK(error_field("model_hessian maybe\n") == "model_hessian");
  CHECK(error_field("arbitration fixed 0.5 extra\n") == "arbitration");
  CHECK(error_field("arbitration linear\n") == "arbitration");
  // cross-line validation reports the config as a whole
  CHECK(error_field("arbitration fixed 1.5\n") == "config");
  CHECK(error_field("waypoint t 1 xyz 0 0 0 quat 1 0 0 0\nwaypoint t 1 xyz 0 0 0 quat 1 0 0 0\n") ==
        "config");
}

TEST_CASE("bundled configs load") {
  for (const char* name : {"dynamic", "shelf", "clutter", "empty"}) {
    const RunConfig c =
        load_run_config(std::string(SAFEIK_DATA_DIR) + "/configs/" + name + ".cfg");
    CHECK(std::filesystem::exists(c.robot_path));
    CHECK(c.dt == doctest::Approx(1.0 / 90.0));
  }
}

TEST_CASE("build_scenario: explicit geometry replaces the built-in scene") {
  RunConfig c = parse_run_config(
      "scene dynamic\n"
      "obstacle p0 0.5 0 0 p1 0.5 0 1 radius 0.05\n"
      "waypoint t 0 xyz 0.5 0 0.4 quat 1 0 0 0\n"
      "waypoint t 3 xyz 0.5 0.1 0.4 quat 1 0 0 0\n");
  const Scenario s = build_scenario(c, 2);
  CHECK(s.scene.name == "dynamic+custom");
  CHECK(s.scene.obstacles.size() == 1);
  CHECK(s.reference.duration() == 3.0);
  c.obstacles.clear();
  c.waypoints.clear();
  CHECK(build_scenario(c, 2).scene.obstacles.size() == 3);
}

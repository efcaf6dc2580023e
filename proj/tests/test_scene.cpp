#include <set>
#include <string>

#include "doctest.h"
#include "lumisec/errors.hpp"
#include "lumisec/scene.hpp"
#include "test_support.hpp"

using namespace lumisec;
using test_support::close_rel;

TEST_CASE("canonical presets match the table layouts") {
  const Scenario best = best_case_scenario();
  CHECK(best.led.x == 2.5);
  CHECK(best.led.z == 3.0);
  CHECK(best.bob.x == 2.5);
  CHECK(best.bob.y == 2.5);
  CHECK(best.bob.z == 0.75);
  REQUIRE(best.n_eves() == 2);
  CHECK(best.eves[0].x == 4.5);
  CHECK(best.eves[1].x == 4.0);
  CHECK(best.n_irs() == 225);

  const Scenario worst = worst_case_scenario();
  CHECK(worst.bob.x == 4.5);
  CHECK(worst.eves[0].x == 2.5);
  CHECK(worst.eves[1].x == 2.0);
}

TEST_CASE("irs_grid covers the wall centered, row-major") {
  const RoomDims room;
  const auto grid = irs_grid(15, 15, 0.30, 0.1875, room);
  REQUIRE(grid.size() == 225);
  for (const Point3& e : grid) {
    CHECK(e.x == 0.0);
    CHECK(e.y >= 0.0);
    CHECK(e.y <= room.y);
    CHECK(e.z >= 0.0);
    CHECK(e.z <= room.z);
  }
  // centering in y: first column starts at 2.5 - 2.1
  CHECK(grid[0].y == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(grid[14].y == doctest::Approx(4.6).epsilon(1e-12));
  // row-major: the first row shares its z, the next row steps down one pitch
  CHECK(grid[0].z == grid[14].z);
  CHECK(grid[15].z == doctest::Approx(grid[0].z - 0.1875).epsilon(1e-12));

  SUBCASE("single element lands on the wall center") {
    const auto one = irs_grid(1, 1, 0.30, 0.1875, room);
    REQUIRE(one.size() == 1);
    CHECK(one[0].x == 0.0);
    CHECK(one[0].y == doctest::Approx(room.y / 2).epsilon(1e-12));
    CHECK(one[0].z == doctest::Approx(room.z / 2).epsilon(1e-12));
  }

  SUBCASE("vertical span beyond the wall is rejected") {
    // 14 * 0.30 = 4.2 m of span against a 3 m wall
    CHECK_THROWS_AS(irs_grid(15, 15, 0.30, 0.30, room), GridDoesNotFit);
  }

  SUBCASE("bad counts and pitches are domain errors") {
    CHECK_THROWS_AS(irs_grid(0, 5, 0.3, 0.2, room), DomainError);
    CHECK_THROWS_AS(irs_grid(5, 5, -0.1, 0.2, room), DomainError);
  }
}

TEST_CASE("grid generation is stable and mirror symmetric") {
  const RoomDims room;
  const auto a = irs_grid(7, 9, 0.25, 0.2, room);
  const auto b = irs_grid(7, 9, 0.25, 0.2, room);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].y == b[i].y);
    CHECK(a[i].z == b[i].z);
  }
  // reflecting about the wall's vertical centerline maps the set to itself
  std::set<std::pair<long long, long long>> keys;
  auto key = [](double y, double z) {
    return std::make_pair(std::llround(y * 1e9), std::llround(z * 1e9));
  };
  for (const Point3& e : a) keys.insert(key(e.y, e.z));
  for (const Point3& e : a) {
    CHECK(keys.count(key(room.y - e.y, e.z)) == 1);
  }
}

TEST_CASE("build_scenario parses, defaults, and validates") {
  SUBCASE("defaults fill in the canonical tables") {
    const Scenario s = build_scenario("{}");
    CHECK(s.room.x == 5.0);
    CHECK(s.led.z == 3.0);
    CHECK(s.bob.x == 2.5);
    CHECK(s.n_eves() == 2);
    CHECK(s.n_irs() == 225);
    CHECK(s.optical.half_power_semi_angle_deg == 60.0);
    CHECK(s.optical.filter_gain == 1.0);
    CHECK(s.system.symbol_period_s == doctest::Approx(1e-9).epsilon(1e-12));
    CHECK(s.system.gap_db == 2.0);
    CHECK(s.irs.pitch_v_m == doctest::Approx(3.0 / 16).epsilon(1e-12));
  }

  SUBCASE("explicit fields are honored with unit conversion") {
    const Scenario s = build_scenario(R"({
      "bob": [1.0, 2.0, 0.5],
      "eves": [[3.0, 3.0, 0.75]],
      "irs": {"rows": 3, "cols": 4, "pitch_h": 0.2, "pitch_v": 0.25},
      "system": {"symbol_period_ns": 2.0, "optical_power_w": 4.0}
    })");
    CHECK(s.bob.y == 2.0);
    CHECK(s.n_eves() == 1);
    CHECK(s.n_irs() == 12);
    CHECK(s.system.symbol_period_s == doctest::Approx(2e-9).epsilon(1e-12));
    CHECK(s.system.optical_power_w == 4.0);
  }

  SUBCASE("matches the programmatic preset") {
    const Scenario parsed = build_scenario(scenario_to_json(best_case_scenario()));
    const Scenario preset = best_case_scenario();
    CHECK(parsed.n_irs() == preset.n_irs());
    CHECK(parsed.bob.x == preset.bob.x);
    CHECK(parsed.irs_elements[37].y == preset.irs_elements[37].y);
    CHECK(scenario_to_json(parsed) == scenario_to_json(preset));
  }

  SUBCASE("out-of-room positions are geometry errors") {
    CHECK_THROWS_AS(build_scenario(R"({"bob": [2.5, 2.5, -1.0]})"), GeometryError);
    CHECK_THROWS_AS(build_scenario(R"({"led": [9.0, 2.5, 3.0]})"), GeometryError);
  }

  SUBCASE("duplicate users are rejected") {
    CHECK_THROWS_AS(
        build_scenario(R"({"bob": [2.0, 2.0, 0.75], "eves": [[2.0, 2.0, 0.75]]})"),
        GeometryError);
    CHECK_THROWS_AS(
        build_scenario(
            R"({"eves": [[3.0, 3.0, 0.75], [3.0, 3.0, 0.75]]})"),
        GeometryError);
  }

  SUBCASE("unknown keys and malformed documents are rejected") {
    CHECK_THROWS_AS(build_scenario(R"({"rom": {"x": 5}})"), MalformedConfig);
    CHECK_THROWS_AS(build_scenario(R"({"irs": {"rows": 3, "colz": 3}})"),
                    MalformedConfig);
    CHECK_THROWS_AS(build_scenario("not json"), MalformedConfig);
    CHECK_THROWS_AS(build_scenario(R"({"bob": [1.0, 2.0]})"), MalformedConfig);
    CHECK_THROWS_AS(build_scenario(R"({"irs": {"rows": 2.5}})"), MalformedConfig);
  }

  SUBCASE("parameter ranges are enforced") {
    CHECK_THROWS_AS(
        build_scenario(R"({"optical": {"reflectivity": 1.5}})"), DomainError);
    CHECK_THROWS_AS(
        build_scenario(R"({"optical": {"fov_deg": 120.0}})"), DomainError);
    CHECK_THROWS_AS(
        build_scenario(R"({"system": {"symbol_period_ns": 0.0}})"), DomainError);
  }
}

TEST_CASE("every generated element satisfies the on-wall invariant") {
  const Scenario s = worst_case_scenario(4, 4);
  REQUIRE(s.n_irs() == 16);
  for (const Point3& e : s.irs_elements) CHECK(e.x == 0.0);
}

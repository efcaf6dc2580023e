#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "lumisec/channel.hpp"
#include "lumisec/errors.hpp"
#include "lumisec/scene.hpp"
#include "lumisec/util.hpp"
#include "test_support.hpp"

using namespace lumisec;
using test_support::close_rel;
using test_support::rel_err;

namespace {

// Restores the expansion mutation hook no matter how a test exits.
struct HookGuard {
  ~HookGuard() { detail::negate_expansion_cross_terms.store(false); }
};

std::vector<int> all_indices(const PathSet& ps) {
  std::vector<int> idx(ps.nlos.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  return idx;
}

}  // namespace

TEST_CASE("lambertian order") {
  CHECK(close_rel(lambertian_order(60.0), 1.0, 1e-12));
  CHECK(close_rel(lambertian_order(45.0), 2.0, 1e-12));
  // independent evaluation: -1/log2(cos(30 deg))
  CHECK(close_rel(lambertian_order(30.0), 4.818841679306421, 1e-12));
  CHECK(lambertian_order(30.0) == doctest::Approx(4.8188).epsilon(1e-4));
  CHECK_THROWS_AS(lambertian_order(0.0), DomainError);
  CHECK_THROWS_AS(lambertian_order(90.0), DomainError);
  CHECK_THROWS_AS(lambertian_order(-5.0), DomainError);
}

TEST_CASE("concentrator gain") {
  CHECK(close_rel(concentrator_gain(1.5, 30.0, 90.0), 2.25, 1e-12));
  CHECK(close_rel(concentrator_gain(1.0, 0.0, 90.0), 1.0, 1e-12));
  CHECK(concentrator_gain(1.5, 95.0, 90.0) == 0.0);
  CHECK_THROWS_AS(concentrator_gain(0.9, 0.0, 90.0), DomainError);
  CHECK_THROWS_AS(concentrator_gain(1.5, 0.0, 91.0), DomainError);
}

TEST_CASE("los_path against hand-evaluated gains") {
  const OpticalParams optical;  // table defaults, filter gain 1
  const Point3 led{2.5, 2.5, 3.0};
  const double m = lambertian_order(optical.half_power_semi_angle_deg);

  SUBCASE("Bob directly under the LED") {
    const PathComponent p = los_path(led, {2.5, 2.5, 0.75}, optical, m);
    // (m+1) A / (2 pi d^2) * Gc with d = 2.25, evaluated independently
    CHECK(close_rel(p.gain, 1.4147106052612920e-05, 1e-12));
    CHECK(p.gain == doctest::Approx(1.4147e-5).epsilon(1e-4));
    CHECK(close_rel(p.delay, 7.5051921419584195e-09, 1e-12));
    CHECK(close_rel(p.delay, 2.25 / kSpeedOfLight, 1e-15));
  }

  SUBCASE("far-corner user") {
    const PathComponent p = los_path(led, {4.5, 4.5, 0.75}, optical, m);
    CHECK(close_rel(p.gain, 2.1249321858747135e-06, 1e-12));
    CHECK(p.gain == doctest::Approx(2.1248e-6).epsilon(1e-3));
  }

  SUBCASE("rays beyond the field of view carry zero gain") {
    OpticalParams narrow = optical;
    narrow.fov_deg = 30.0;
    // 45 degrees off axis
    const PathComponent p = los_path(led, {4.75, 2.5, 0.75}, narrow, m);
    CHECK(p.gain == 0.0);
    CHECK(p.delay > 0.0);
    // a receiver above the LED plane sees the ray from below: rejected
    const PathComponent q = los_path({2.5, 2.5, 1.0}, {2.5, 3.5, 2.0}, optical, m);
    CHECK(q.gain == 0.0);
  }

  SUBCASE("doubling the on-axis distance quarters the gain") {
    const PathComponent near = los_path({2.5, 2.5, 3.0}, {2.5, 2.5, 2.0}, optical, m);
    const PathComponent far = los_path({2.5, 2.5, 3.0}, {2.5, 2.5, 1.0}, optical, m);
    CHECK(close_rel(far.gain, near.gain / 4.0, 1e-12));
  }

  SUBCASE("coincident points are degenerate") {
    CHECK_THROWS_AS(los_path(led, led, optical, m), DegenerateGeometry);
    CHECK_THROWS_AS(los_path(led, {2.5, 2.5, 0.75}, optical, 0.0), DomainError);
  }
}

TEST_CASE("nlos_path against hand-evaluated geometry") {
  const OpticalParams optical;
  const Point3 led{2.5, 2.5, 3.0};
  const Point3 element{0.0, 2.5, 1.5};
  const Point3 bob{2.5, 2.5, 0.75};
  const double m = lambertian_order(optical.half_power_semi_angle_deg);

  SUBCASE("wall-center element toward Bob") {
    const PathComponent p = nlos_path(led, element, bob, optical, m);
    // d1 = sqrt(8.5), d2 = sqrt(6.8125); gain evaluated term by term in an
    // independent script
    CHECK(close_rel(p.gain, 3.4679355392046098e-07, 1e-12));
    CHECK(close_rel(p.delay, 1.8431259450330428e-08, 1e-12));
    CHECK(p.delay == doctest::Approx(18.434e-9).epsilon(1e-3));
    const double d1 = std::sqrt(8.5);
    const double d2 = std::sqrt(6.8125);
    CHECK(close_rel(p.delay, (d1 + d2) / kSpeedOfLight, 1e-15));
  }

  SUBCASE("zero reflectivity zeroes the gain, not the delay") {
    OpticalParams dark = optical;
    dark.reflectivity = 0.0;
    const PathComponent p = nlos_path(led, element, bob, dark, m);
    CHECK(p.gain == 0.0);
    CHECK(close_rel(p.delay, 1.8431259450330428e-08, 1e-12));
  }

  SUBCASE("arrival beyond the field of view zeroes the gain only") {
    // the user sits above the element, so the ray arrives from below
    const PathComponent p = nlos_path(led, element, {2.5, 2.5, 2.5}, optical, m);
    CHECK(p.gain == 0.0);
    CHECK(p.delay > 0.0);
  }

  SUBCASE("degenerate segments throw") {
    CHECK_THROWS_AS(nlos_path(led, element, element, optical, m),
                    DegenerateGeometry);
    CHECK_THROWS_AS(nlos_path(element, element, bob, optical, m),
                    DegenerateGeometry);
  }
}

TEST_CASE("compute_paths satisfies the path set invariants") {
  const Scenario s = best_case_scenario();
  const PathSet bob = compute_paths(s, s.bob);
  REQUIRE(static_cast<int>(bob.nlos.size()) == s.n_irs());
  CHECK(bob.los.gain > 0.0);
  for (const PathComponent& p : bob.nlos) {
    CHECK(p.gain >= 0.0);
    CHECK(p.delay > bob.los.delay);  // reflected paths are strictly longer
  }
  const PathSet eve = compute_paths(s, s.eves[0]);
  for (const PathComponent& p : eve.nlos) CHECK(p.delay > eve.los.delay);
}

TEST_CASE("cfr basics") {
  PathSet ps;
  ps.los = {2.0e-5, 8e-9};
  ps.nlos = {{1.0e-6, 1.5e-8}, {5.0e-7, 2.2e-8}};
  const std::vector<int> none;
  const std::vector<int> both{0, 1};

  SUBCASE("empty active set leaves the LoS phasor") {
    for (double f : {0.0, 1e8, 3.7e8}) {
      CHECK(close_rel(std::abs(cfr(ps, none, f)), ps.los.gain, 1e-12));
    }
  }

  SUBCASE("DC response is the real positive gain sum") {
    const std::complex<double> q = cfr(ps, both, 0.0);
    CHECK(close_rel(q.real(), 2.0e-5 + 1.0e-6 + 5.0e-7, 1e-12));
    CHECK(std::abs(q.imag()) < 1e-20);
  }

  SUBCASE("equal gains cancel at the half-period frequency") {
    PathSet two;
    two.los = {1.0, 5e-9};
    two.nlos = {{1.0, 5e-9 + 1e-9}};
    const std::vector<int> one{0};
    const double f = 0.5 / 1e-9;  // phase difference of pi
    CHECK(std::norm(cfr(two, one, f)) < 1e-24);
  }
}

TEST_CASE("expanded channel power matches |cfr|^2") {
  std::mt19937_64 rng(1234);
  const std::vector<int> none;

  SUBCASE("empty active set is the LoS power") {
    PathSet ps;
    ps.los = {3.0e-5, 9e-9};
    CHECK(cfr_power_expanded(ps, none, 2.5e8) == ps.los.gain * ps.los.gain);
  }

  SUBCASE("randomized path sets and frequencies agree to 1e-12") {
    for (int trial = 0; trial < 200; ++trial) {
      PathSet ps;
      ps.los = {uniform_in(rng, 0.1, 1.0), uniform_in(rng, 1e-9, 2e-8)};
      const int n = 1 + bounded_rand(rng, 5);
      for (int i = 0; i < n; ++i) {
        ps.nlos.push_back({uniform_in(rng, 0.1, 1.0),
                           ps.los.delay + uniform_in(rng, 1e-10, 3e-8)});
      }
      const auto active = all_indices(ps);
      double amplitude = ps.los.gain;
      for (const PathComponent& p : ps.nlos) amplitude += p.gain;
      const double scale = amplitude * amplitude;  // bounds |Q(f)|^2
      for (int k = 0; k < 10; ++k) {
        const double f = uniform_in(rng, 0.0, 5e8);
        const double direct = std::norm(cfr(ps, active, f));
        const double expanded = cfr_power_expanded(ps, active, f);
        CHECK(std::abs(direct - expanded) <= 1e-12 * scale);
      }
    }
  }

  SUBCASE("DC coherence equals the squared gain sum") {
    PathSet ps;
    ps.los = {0.7, 8e-9};
    ps.nlos = {{0.2, 1.2e-8}, {0.4, 1.9e-8}, {0.1, 2.6e-8}};
    const auto active = all_indices(ps);
    const double total = 0.7 + 0.2 + 0.4 + 0.1;
    CHECK(close_rel(cfr_power_expanded(ps, active, 0.0), total * total, 1e-12));
  }

  SUBCASE("negating the cross terms breaks the identity") {
    HookGuard guard;
    PathSet ps;
    ps.los = {0.9, 8e-9};
    ps.nlos = {{0.5, 1.3e-8}};
    const std::vector<int> one{0};
    const double f = 1.1e8;
    detail::negate_expansion_cross_terms.store(true);
    const double mutated = cfr_power_expanded(ps, one, f);
    detail::negate_expansion_cross_terms.store(false);
    const double honest = cfr_power_expanded(ps, one, f);
    CHECK(rel_err(mutated, std::norm(cfr(ps, one, f))) > 1e-6);
    CHECK(rel_err(honest, std::norm(cfr(ps, one, f))) <= 1e-12);
  }
}

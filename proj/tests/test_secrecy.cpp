#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "doctest.h"
#include "lumisec/channel.hpp"
#include "lumisec/errors.hpp"
#include "lumisec/scene.hpp"
#include "lumisec/secrecy.hpp"
#include "lumisec/util.hpp"
#include "test_support.hpp"

using namespace lumisec;
using test_support::close_rel;
using test_support::rel_err;

namespace {

std::vector<int> all_indices(int n) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  return idx;
}

// Trapezoid oracle on a dense uniform grid, evaluated through the complex
// cfr op rather than the production grid path.
double trapezoid_rate(const PathSet& paths, std::span<const int> active,
                      const SnrPrefix& prefix, int panels) {
  const double h = prefix.f_max_hz / panels;
  double sum = 0.0;
  for (int i = 0; i <= panels; ++i) {
    const double f = h * i;
    const double value =
        std::log2(1.0 + prefix.lambda * std::norm(cfr(paths, active, f)));
    sum += (i == 0 || i == panels) ? 0.5 * value : value;
  }
  return sum * h;
}

PathSet synthetic(double g_los, double tau_los,
                  std::vector<PathComponent> nlos) {
  PathSet ps;
  ps.los = {g_los, tau_los};
  ps.nlos = std::move(nlos);
  return ps;
}

}  // namespace

TEST_CASE("SNR prefix from the table parameters") {
  SystemParams sys;  // T_s = 1 ns, N = 1e-21, k = 3.2, gap 2 dB
  const SnrPrefix p6 = make_snr_prefix(sys, 0.6, 6.0);
  // independent evaluation of 2 T P^2 R^2 / (10^0.2 k^2 N)
  CHECK(close_rel(p6.lambda, 1.5971107782154890e+12, 1e-12));
  CHECK(p6.lambda == doctest::Approx(1.597e12).epsilon(1e-3));
  CHECK(p6.f_max_hz == doctest::Approx(5e8).epsilon(1e-12));

  // lambda scales with the square of the optical power
  const SnrPrefix p12 = make_snr_prefix(sys, 0.6, 12.0);
  CHECK(close_rel(p12.lambda, 4.0 * p6.lambda, 1e-12));
  CHECK_THROWS_AS(make_snr_prefix(sys, 0.6, 0.0), DomainError);
}

TEST_CASE("snr_at is the linear prefix scaling") {
  const SnrPrefix prefix{2.0, 5e8};
  CHECK(snr_at(1e8, 0.0, prefix) == 0.0);
  CHECK(snr_at(1e8, 3.0, prefix) == 6.0);
  CHECK_THROWS_AS(snr_at(6e8, 1.0, prefix), DomainError);
  CHECK_THROWS_AS(snr_at(1e8, -1.0, prefix), DomainError);
}

TEST_CASE("rate_exact on flat channels") {
  std::mt19937_64 rng(77);
  const std::vector<int> none;
  for (int trial = 0; trial < 20; ++trial) {
    const PathSet ps = synthetic(uniform_in(rng, 1e-6, 1e-4),
                                 uniform_in(rng, 5e-9, 2e-8), {});
    const SnrPrefix prefix{uniform_in(rng, 1e9, 1e13),
                           uniform_in(rng, 1e8, 1e9)};
    const RateResult r = rate_exact(ps, none, prefix);
    const double closed_form =
        prefix.f_max_hz * std::log2(1.0 + prefix.lambda * ps.los.gain * ps.los.gain);
    CHECK(rel_err(r.rate_bps, closed_form) <= 1e-9);
    CHECK(r.mode == RateMode::kExactIntegral);
    CHECK(r.integrand_samples == 4097 + 8193);
  }

  SUBCASE("zero gain gives zero rate") {
    const PathSet ps = synthetic(0.0, 8e-9, {});
    CHECK(rate_exact(ps, none, SnrPrefix{1e12, 5e8}).rate_bps == 0.0);
  }

  SUBCASE("panel count must be even and positive") {
    const PathSet ps = synthetic(1e-5, 8e-9, {});
    QuadratureSettings quad;
    quad.panels = 5;
    CHECK_THROWS_AS(rate_exact(ps, none, SnrPrefix{1e12, 5e8}, quad), DomainError);
  }
}

TEST_CASE("rate_exact against the high-resolution trapezoid oracle") {
  const Scenario s = best_case_scenario();
  const PathSet bob = compute_paths(s, s.bob);
  const SnrPrefix prefix = make_snr_prefix(s, 6.0);
  const auto active = all_indices(s.n_irs());

  const RateResult r = rate_exact(bob, active, prefix);
  // frozen from the independent 65536-panel trapezoid evaluation
  CHECK(rel_err(r.rate_bps, 4.3893471023833694e+09) <= 1e-6);

  const double trap = trapezoid_rate(bob, active, prefix, 65536);
  CHECK(rel_err(r.rate_bps, trap) <= 1e-6);
  CHECK(rel_err(trap, 4.3893471023833694e+09) <= 1e-9);
}

TEST_CASE("integration self-consistency and failure reporting") {
  const Scenario s = best_case_scenario(4, 4);
  const PathSet bob = compute_paths(s, s.bob);
  const SnrPrefix prefix = make_snr_prefix(s, 3.0);
  const auto active = all_indices(s.n_irs());

  QuadratureSettings coarse;
  coarse.panels = 4096;
  coarse.check_convergence = false;
  QuadratureSettings fine;
  fine.panels = 8192;
  fine.check_convergence = false;
  const double a = rate_exact(bob, active, prefix, coarse).rate_bps;
  const double b = rate_exact(bob, active, prefix, fine).rate_bps;
  CHECK(rel_err(a, b) < 1e-6);

  // with the check on, the call itself enforces agreement
  CHECK_NOTHROW(rate_exact(bob, active, prefix));

  SUBCASE("an integrand oscillating far beyond the grid is reported") {
    const PathSet wild =
        synthetic(1e-5, 8e-9, {{1e-5, 8e-9 + 1e-3}});  // ~1e6 cycles in band
    const std::vector<int> one{0};
    QuadratureSettings quad;
    quad.panels = 64;
    CHECK_THROWS_AS(rate_exact(wild, one, SnrPrefix{1e12, 5e8}, quad),
                    IntegrationNotConverged);
  }
}

TEST_CASE("rate monotonicity in power and noise") {
  const Scenario s = best_case_scenario(3, 3);
  const PathSet bob = compute_paths(s, s.bob);
  const auto active = all_indices(s.n_irs());
  double previous = 0.0;
  for (double p : {1.0, 2.0, 4.0, 8.0}) {
    const double r = rate_exact(bob, active, make_snr_prefix(s, p)).rate_bps;
    CHECK(r >= previous);
    previous = r;
  }
  SystemParams noisy = s.system;
  noisy.noise_psd_a2_per_hz *= 10.0;
  CHECK(rate_exact(bob, active, make_snr_prefix(noisy, 0.6, 6.0)).rate_bps <
        rate_exact(bob, active, make_snr_prefix(s, 6.0)).rate_bps);
}

TEST_CASE("rate_approx") {
  const std::vector<int> none;

  SUBCASE("flat channel equals the exact rate") {
    const PathSet ps = synthetic(2e-5, 8e-9, {});
    const SnrPrefix prefix{1.5e12, 5e8};
    const double exact = rate_exact(ps, none, prefix).rate_bps;
    const double approx = rate_approx(ps, none, prefix).rate_bps;
    CHECK(rel_err(exact, approx) <= 1e-12);
    CHECK(rate_approx(ps, none, prefix).mode == RateMode::kClosedFormApprox);
  }

  SUBCASE("vanishing delay difference removes the correction") {
    const PathSet ps = synthetic(2e-5, 8e-9, {{1e-5, 8e-9}});
    const std::vector<int> one{0};
    const SnrPrefix prefix{1.5e12, 5e8};
    const double expected =
        prefix.f_max_hz * std::log2(1.0 + prefix.lambda * (4e-10 + 1e-10));
    CHECK(close_rel(rate_approx(ps, one, prefix).rate_bps, expected, 1e-12));
  }

  SUBCASE("pinned one-element case with delay offset equal to the symbol") {
    // lambda = 1, g_los = g_n = 1, T_s = 1 s; sinc(pi) = 0 makes the bracket 1:
    // 0.5 log2(3) + 1/(3 ln 2), evaluated independently
    const PathSet ps = synthetic(1.0, 0.5, {{1.0, 1.5}});
    const std::vector<int> one{0};
    const SnrPrefix prefix{1.0, 0.5};
    CHECK(close_rel(rate_approx(ps, one, prefix).rate_bps,
                    1.2733795973235660, 1e-12));
  }

  SUBCASE("tracks the exact rate on a room-scale channel") {
    const Scenario s = best_case_scenario(3, 3);
    const PathSet bob = compute_paths(s, s.bob);
    const SnrPrefix prefix = make_snr_prefix(s, 6.0);
    const auto active = all_indices(s.n_irs());
    const double exact = rate_exact(bob, active, prefix).rate_bps;
    const double approx = rate_approx(bob, active, prefix).rate_bps;
    // no error bound is claimed for the closed form; just report sanity
    CHECK(approx > 0.0);
    CHECK(rel_err(exact, approx) < 0.05);
  }
}

TEST_CASE("secrecy_non_colluding") {
  const std::vector<double> two{3.0, 4.0};
  CHECK(secrecy_non_colluding(5.0, two) == 1.0);
  const std::vector<double> other{3.0, 1.0};
  CHECK(secrecy_non_colluding(2.0, other) == 0.0);
  CHECK_THROWS_AS(secrecy_non_colluding(1.0, std::vector<double>{}), EmptyEveSet);

  SUBCASE("composition with exact rates on the best-case preset") {
    const Scenario s = best_case_scenario();
    const SnrPrefix prefix = make_snr_prefix(s, 6.0);
    const std::vector<int> none;
    const double rb = rate_exact(compute_paths(s, s.bob), none, prefix).rate_bps;
    // frozen closed-form value for Bob's LoS-only rate at 6 W
    CHECK(rel_err(rb, 4.1624204305307918e+09) <= 1e-9);
    std::vector<double> eves;
    for (const Point3& e : s.eves) {
      eves.push_back(rate_exact(compute_paths(s, e), none, prefix).rate_bps);
    }
    const double cs = secrecy_non_colluding(rb, eves);
    CHECK(cs == std::max(0.0, rb - std::max(eves[0], eves[1])));
    CHECK(cs > 0.0);
  }
}

TEST_CASE("secrecy_colluding") {
  const Scenario s = worst_case_scenario();
  const PathSet bob = compute_paths(s, s.bob);
  std::vector<PathSet> eves;
  for (const Point3& e : s.eves) eves.push_back(compute_paths(s, e));

  SUBCASE("all-Bob allocation in the worst case sits below zero pre-clamp") {
    const SnrPrefix prefix = make_snr_prefix(s, 3.0);
    std::vector<std::vector<int>> actives(3);
    actives[0] = all_indices(s.n_irs());
    const ColludingSecrecy cs = secrecy_colluding(bob, eves, actives, prefix);
    CHECK(cs.integral_bps < 0.0);
    CHECK(cs.capacity_bps == 0.0);
  }

  SUBCASE("single eavesdropper reduces to the non-colluding capacity") {
    const SnrPrefix prefix = make_snr_prefix(s, 5.0);
    std::vector<PathSet> one{eves[0]};
    std::vector<std::vector<int>> actives(2);
    actives[0] = all_indices(s.n_irs());
    const ColludingSecrecy cs = secrecy_colluding(bob, one, actives, prefix);
    const double rb = rate_exact(bob, actives[0], prefix).rate_bps;
    const double re = rate_exact(eves[0], actives[1], prefix).rate_bps;
    const std::vector<double> rates{re};
    const double tol = 2e-6 * std::max(rb, 1.0);
    CHECK(std::abs(cs.capacity_bps - secrecy_non_colluding(rb, rates)) <= tol);
  }

  SUBCASE("identical channels give exactly zero") {
    const SnrPrefix prefix = make_snr_prefix(s, 4.0);
    std::vector<PathSet> twin{bob};
    std::vector<std::vector<int>> actives(2);
    actives[0] = {0, 3, 7};
    actives[1] = {0, 3, 7};
    const ColludingSecrecy cs = secrecy_colluding(bob, twin, actives, prefix);
    CHECK(cs.integral_bps == 0.0);
    CHECK(cs.capacity_bps == 0.0);
  }

  SUBCASE("empty eavesdropper set is rejected") {
    const SnrPrefix prefix = make_snr_prefix(s, 4.0);
    std::vector<PathSet> none_set;
    std::vector<std::vector<int>> actives(1);
    CHECK_THROWS_AS(secrecy_colluding(bob, none_set, actives, prefix), EmptyEveSet);
  }
}

// SPDX-License-Identifier: Apache-2.0

#include "lumisec/secrecy.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "lumisec/errors.hpp"

namespace lumisec {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_valid(const QuadratureSettings& quad) {
  if (quad.panels < 2 || quad.panels % 2 != 0) {
    throw DomainError("quadrature panel count must be even and >= 2");
  }
  if (!(quad.rel_tol > 0.0)) {
    throw DomainError("quadrature tolerance must be positive");
  }
}

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

}  // namespace

SnrPrefix make_snr_prefix(const SystemParams& system,
                          double pd_responsivity_a_per_w,
                          double optical_power_w) {
  if (!(optical_power_w > 0.0)) throw DomainError("optical power must be positive");
  if (!(pd_responsivity_a_per_w > 0.0)) throw DomainError("PD responsivity must be positive");
  const double gap_linear = std::pow(10.0, system.gap_db / 10.0);
  const double k2 = system.modulation_scale * system.modulation_scale;
  SnrPrefix prefix;
  prefix.lambda = 2.0 * system.symbol_period_s * optical_power_w *
                  optical_power_w * pd_responsivity_a_per_w *
                  pd_responsivity_a_per_w /
                  (gap_linear * k2 * system.noise_psd_a2_per_hz);
  prefix.f_max_hz = 1.0 / (2.0 * system.symbol_period_s);
  return prefix;
}

SnrPrefix make_snr_prefix(const Scenario& scenario, double optical_power_w) {
  return make_snr_prefix(scenario.system, scenario.optical.pd_responsivity_a_per_w,
                         optical_power_w);
}

double snr_at(double f_hz, double cfr_power, const SnrPrefix& prefix) {
  if (f_hz < 0.0 || f_hz > prefix.f_max_hz) {
    throw DomainError("frequency outside [0, f_max]");
  }
  if (cfr_power < 0.0) throw DomainError("channel power gain must be >= 0");
  return prefix.lambda * cfr_power;
}

namespace detail {

namespace {

// Adds one path's phasor g e^{-j 2 pi f tau} across the grid by repeated
// multiplication with the per-step rotation. Grid point 0 (f = 0) is exact.
void accumulate_path(double gain, double delay, double df, int n_points,
                     std::vector<std::complex<double>>& q) {
  if (gain == 0.0) return;
  const std::complex<double> step = std::polar(1.0, -kTwoPi * df * delay);
  std::complex<double> phasor(gain, 0.0);
  for (int i = 0; i < n_points; ++i) {
    q[static_cast<std::size_t>(i)] += phasor;
    phasor *= step;
  }
}

}  // namespace

void cfr_power_grid(const PathSet& paths, std::span<const int> active,
                    double f_max_hz, int panels, std::vector<double>& power) {
  const int n_points = panels + 1;
  const double df = f_max_hz / panels;

  thread_local std::vector<std::complex<double>> q;
  q.assign(static_cast<std::size_t>(n_points), {0.0, 0.0});
  accumulate_path(paths.los.gain, paths.los.delay, df, n_points, q);
  for (int n : active) {
    const PathComponent& p = paths.nlos[static_cast<std::size_t>(n)];
    accumulate_path(p.gain, p.delay, df, n_points, q);
  }

  power.resize(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    power[static_cast<std::size_t>(i)] = std::norm(q[static_cast<std::size_t>(i)]);
  }
}

double simpson(std::span<const double> values, double h) {
  const std::size_t n = values.size() - 1;
  double sum = values[0];
  for (std::size_t i = 1; i < n; ++i) {
    sum += (i % 2 == 1 ? 4.0 : 2.0) * values[i];
  }
  sum += values[n];
  return sum * h / 3.0;
}

void require_converged(double coarse, double fine, double rel_tol) {
  const double diff = std::abs(fine - coarse);
  const double scale = std::max(std::abs(fine), std::abs(coarse));
  if (diff > rel_tol * scale) {
    std::ostringstream msg;
    msg << "panel doubling moved the integral from " << coarse << " to "
        << fine << " (relative change " << diff / scale << ")";
    throw IntegrationNotConverged(msg.str());
  }
}

}  // namespace detail

namespace {

// One Simpson pass of log2(1 + lambda |Q(f)|^2) at the given panel count.
double rate_pass(const PathSet& paths, std::span<const int> active,
                 const SnrPrefix& prefix, int panels) {
  thread_local std::vector<double> power;
  detail::cfr_power_grid(paths, active, prefix.f_max_hz, panels, power);
  thread_local std::vector<double> integrand;
  integrand.resize(power.size());
  for (std::size_t i = 0; i < power.size(); ++i) {
    integrand[i] = std::log2(1.0 + prefix.lambda * power[i]);
  }
  return detail::simpson(integrand, prefix.f_max_hz / panels);
}

}  // namespace

RateResult rate_exact(const PathSet& paths, std::span<const int> active,
                      const SnrPrefix& prefix, const QuadratureSettings& quad) {
  require_valid(quad);
  RateResult result;
  result.mode = RateMode::kExactIntegral;
  result.rate_bps = rate_pass(paths, active, prefix, quad.panels);
  result.integrand_samples = quad.panels + 1;
  if (quad.check_convergence) {
    const double fine = rate_pass(paths, active, prefix, 2 * quad.panels);
    result.integrand_samples += 2 * quad.panels + 1;
    detail::require_converged(result.rate_bps, fine, quad.rel_tol);
  }
  return result;
}

RateResult rate_approx(const PathSet& paths, std::span<const int> active,
                       const SnrPrefix& prefix) {
  const double ts = 1.0 / (2.0 * prefix.f_max_hz);
  const double g_los = paths.los.gain;
  const double tau_los = paths.los.delay;

  double nlos_power = 0.0;
  for (int n : active) {
    const double g = paths.nlos[static_cast<std::size_t>(n)].gain;
    nlos_power += g * g;
  }
  const double dk = 1.0 + prefix.lambda * (g_los * g_los + nlos_power);

  double los_cross = 0.0;
  double pair_cross = 0.0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const PathComponent& pi = paths.nlos[static_cast<std::size_t>(active[i])];
    los_cross += pi.gain *
                 (1.0 - sinc(std::numbers::pi * (pi.delay - tau_los) / ts));
    for (std::size_t u = 0; u < i; ++u) {
      const PathComponent& pu = paths.nlos[static_cast<std::size_t>(active[u])];
      pair_cross += pi.gain * pu.gain *
                    (1.0 - sinc(std::numbers::pi * (pu.delay - pi.delay) / ts));
    }
  }

  RateResult result;
  result.mode = RateMode::kClosedFormApprox;
  result.rate_bps = std::log2(dk) / (2.0 * ts) +
                    prefix.lambda / (dk * std::numbers::ln2) *
                        (g_los / ts * los_cross + pair_cross / ts);
  result.integrand_samples = 0;
  return result;
}

double secrecy_non_colluding(double rate_bob_bps,
                             std::span<const double> rates_eves_bps) {
  if (rates_eves_bps.empty()) {
    throw EmptyEveSet("non-colluding secrecy needs at least one eavesdropper");
  }
  double strongest = rates_eves_bps[0];
  for (double r : rates_eves_bps) strongest = std::max(strongest, r);
  return std::max(0.0, rate_bob_bps - strongest);
}

namespace {

// One Simpson pass of the combined colluding integrand.
double colluding_pass(const PathSet& paths_bob,
                      std::span<const PathSet> paths_eves,
                      std::span<const std::vector<int>> actives,
                      const SnrPrefix& prefix, int panels) {
  thread_local std::vector<double> bob_power;
  detail::cfr_power_grid(paths_bob, actives[0], prefix.f_max_hz, panels,
                         bob_power);

  thread_local std::vector<double> eve_sum;
  eve_sum.assign(bob_power.size(), 0.0);
  thread_local std::vector<double> scratch;
  for (std::size_t j = 0; j < paths_eves.size(); ++j) {
    detail::cfr_power_grid(paths_eves[j], actives[j + 1], prefix.f_max_hz,
                           panels, scratch);
    for (std::size_t i = 0; i < eve_sum.size(); ++i) eve_sum[i] += scratch[i];
  }

  thread_local std::vector<double> integrand;
  integrand.resize(bob_power.size());
  for (std::size_t i = 0; i < bob_power.size(); ++i) {
    integrand[i] = std::log2((1.0 + prefix.lambda * bob_power[i]) /
                             (1.0 + prefix.lambda * eve_sum[i]));
  }
  return detail::simpson(integrand, prefix.f_max_hz / panels);
}

}  // namespace

ColludingSecrecy secrecy_colluding(const PathSet& paths_bob,
                                   std::span<const PathSet> paths_eves,
                                   std::span<const std::vector<int>> actives,
                                   const SnrPrefix& prefix,
                                   const QuadratureSettings& quad) {
  require_valid(quad);
  if (paths_eves.empty()) {
    throw EmptyEveSet("colluding secrecy needs at least one eavesdropper");
  }
  if (actives.size() != paths_eves.size() + 1) {
    throw DomainError("need one active set per user, Bob first");
  }

  ColludingSecrecy out;
  out.integral_bps =
      colluding_pass(paths_bob, paths_eves, actives, prefix, quad.panels);
  out.integrand_samples =
      static_cast<long>(quad.panels + 1) * static_cast<long>(actives.size());
  if (quad.check_convergence) {
    const double fine =
        colluding_pass(paths_bob, paths_eves, actives, prefix, 2 * quad.panels);
    out.integrand_samples +=
        static_cast<long>(2 * quad.panels + 1) * static_cast<long>(actives.size());
    detail::require_converged(out.integral_bps, fine, quad.rel_tol);
  }
  out.capacity_bps = std::max(0.0, out.integral_bps);
  return out;
}

}  // namespace lumisec

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "lumisec/channel.hpp"
#include "lumisec/scene.hpp"

namespace lumisec {

/// Frequency-independent SNR scale and the integration band edge.
/// lambda = 2 T_s P_opt^2 R_pd^2 / (Gamma_linear k^2 N) with a flat transmit
/// power distribution; f_max = 1 / (2 T_s).
struct SnrPrefix {
  double lambda = 0.0;
  double f_max_hz = 0.0;
};

SnrPrefix make_snr_prefix(const SystemParams& system,
                          double pd_responsivity_a_per_w,
                          double optical_power_w);
SnrPrefix make_snr_prefix(const Scenario& scenario, double optical_power_w);

/// Settings for the composite Simpson rate integrals. `panels` must be even
/// and >= 2. When `check_convergence` is set, the integral is recomputed with
/// doubled panels and IntegrationNotConverged is raised if the two results
/// disagree by more than `rel_tol` (relative).
struct QuadratureSettings {
  int panels = 4096;
  double rel_tol = 1e-6;
  bool check_convergence = true;
};

enum class RateMode { kExactIntegral, kClosedFormApprox };

struct RateResult {
  double rate_bps = 0.0;
  long integrand_samples = 0;  // total integrand evaluations performed
  RateMode mode = RateMode::kExactIntegral;
};

/// SNR at one frequency given the channel power gain: lambda * |Q(f)|^2.
double snr_at(double f_hz, double cfr_power, const SnrPrefix& prefix);

/// Achievable rate by integrating log2(1 + lambda |Q(f)|^2) over [0, f_max]
/// with composite Simpson on a uniform grid. Deterministic for fixed
/// settings: the grid is accumulated in index order.
RateResult rate_exact(const PathSet& paths, std::span<const int> active,
                      const SnrPrefix& prefix,
                      const QuadratureSettings& quad = {});

/// Closed-form rate approximation: the flat-power log term plus the
/// sinc-based frequency-selectivity correction. sin(x)/x is taken as 1 at
/// x = 0. Exposed for validating the analysis; optimization paths use
/// rate_exact.
RateResult rate_approx(const PathSet& paths, std::span<const int> active,
                       const SnrPrefix& prefix);

/// max(0, rate_bob - max_j rates_eves[j]). Throws EmptyEveSet when the list
/// is empty.
double secrecy_non_colluding(double rate_bob_bps,
                             std::span<const double> rates_eves_bps);

struct ColludingSecrecy {
  double capacity_bps = 0.0;  // clamped at zero
  double integral_bps = 0.0;  // pre-clamp value, kept as a diagnostic
  long integrand_samples = 0;
};

/// Secrecy capacity against eavesdroppers that combine their signals with
/// maximum ratio combining: the group SNR is the sum of the individual SNRs.
/// Evaluates the single combined integrand
///   log2((1 + lambda |Q_B(f)|^2) / (1 + lambda sum_j |Q_Ej(f)|^2))
/// over the band and clamps the full integral once. `actives` holds the
/// per-user element subsets, Bob first, then each eavesdropper.
ColludingSecrecy secrecy_colluding(const PathSet& paths_bob,
                                   std::span<const PathSet> paths_eves,
                                   std::span<const std::vector<int>> actives,
                                   const SnrPrefix& prefix,
                                   const QuadratureSettings& quad = {});

namespace detail {

/// Fills |Q(f_i)|^2 on the uniform (panels + 1)-point grid over [0, f_max],
/// restricted to the active element subset. Each path's phasor is advanced
/// recursively across the grid; the f = 0 point is exact.
void cfr_power_grid(const PathSet& paths, std::span<const int> active,
                    double f_max_hz, int panels, std::vector<double>& power);

/// Composite Simpson weights applied in grid index order.
double simpson(std::span<const double> values, double h);

/// Throws IntegrationNotConverged when the coarse and fine estimates differ
/// by more than rel_tol relative to the larger magnitude.
void require_converged(double coarse, double fine, double rel_tol);

}  // namespace detail

}  // namespace lumisec

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <complex>
#include <span>
#include <vector>

#include "lumisec/scene.hpp"

namespace lumisec {

/// One propagation path: optical channel gain (unitless, >= 0; exactly 0 when
/// the field-of-view cutoff applies) and propagation delay in seconds.
struct PathComponent {
  double gain = 0.0;
  double delay = 0.0;
};

/// All paths seen by one receiver: the direct LoS component plus one reflected
/// component per IRS element, in canonical element order.
struct PathSet {
  PathComponent los;
  std::vector<PathComponent> nlos;
};

/// Lambertian order m = -1 / log2(cos(half_angle)). Throws DomainError unless
/// half_angle lies in (0, 90) degrees.
double lambertian_order(double half_angle_deg);

/// Optical concentrator gain: xi^2 / sin^2(fov) while the incidence angle is
/// inside the field of view, 0 otherwise.
double concentrator_gain(double refractive_index, double incidence_deg,
                         double fov_deg);

/// Direct LED-to-receiver path. The irradiance angle is measured from the
/// LED's downward normal and the incidence angle from the receiver's upward
/// normal; rays beyond the field of view yield zero gain. The delay is the
/// Euclidean distance over the speed of light.
PathComponent los_path(const Point3& led, const Point3& user,
                       const OpticalParams& optical, double lambertian_m);

/// Reflected path LED -> IRS element -> receiver, using the specular
/// reflection gain with the combined segment length for both the inverse
/// square law and the delay. The field-of-view cutoff zeroes the gain only;
/// the delay stays finite.
PathComponent nlos_path(const Point3& led, const Point3& element,
                        const Point3& user, const OpticalParams& optical,
                        double lambertian_m);

/// LoS plus per-element reflected paths for one receiver position.
PathSet compute_paths(const Scenario& scenario, const Point3& user);

/// Channel frequency response restricted to the given element subset:
/// Q(f) = g_los e^{-j 2 pi f tau_los} + sum_n g_n e^{-j 2 pi f tau_n}.
/// `active` holds 0-based element indices.
std::complex<double> cfr(const PathSet& paths, std::span<const int> active,
                         double f_hz);

/// |Q(f)|^2 evaluated through the expanded form: LoS power, LoS x NLoS cosine
/// cross terms over the delay differences, NLoS powers, and pairwise NLoS
/// cosine terms. Algebraically identical to |cfr(...)|^2; kept as an
/// independent route for cross-checking.
double cfr_power_expanded(const PathSet& paths, std::span<const int> active,
                          double f_hz);

namespace detail {
// Test hook: flips the sign of the cosine cross terms inside
// cfr_power_expanded so mutation checks can prove the identity suite bites.
extern std::atomic<bool> negate_expansion_cross_terms;
}  // namespace detail

}  // namespace lumisec

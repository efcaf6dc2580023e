// SPDX-License-Identifier: Apache-2.0

#include "lumisec/channel.hpp"

#include <cmath>
#include <numbers>

#include "lumisec/errors.hpp"

namespace lumisec {

namespace detail {
std::atomic<bool> negate_expansion_cross_terms{false};
}  // namespace detail

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

double lambertian_order(double half_angle_deg) {
  if (!(half_angle_deg > 0.0 && half_angle_deg < 90.0)) {
    throw DomainError("half-power semi-angle must lie in (0, 90) degrees");
  }
  return -1.0 / std::log2(std::cos(half_angle_deg * kDegToRad));
}

double concentrator_gain(double refractive_index, double incidence_deg,
                         double fov_deg) {
  if (!(refractive_index >= 1.0)) throw DomainError("refractive index must be >= 1");
  if (!(fov_deg > 0.0 && fov_deg <= 90.0))
    throw DomainError("field of view must lie in (0, 90] degrees");
  if (incidence_deg < 0.0 || incidence_deg > fov_deg) return 0.0;
  const double s = std::sin(fov_deg * kDegToRad);
  return refractive_index * refractive_index / (s * s);
}

namespace {

// Shared gain machinery for both path kinds. cos_irradiance is measured from
// the LED's -z normal, cos_incidence from the receiver's +z normal. Rays
// outside the field of view, or arriving from below either normal's
// hemisphere, carry zero gain.
double path_gain(double total_length, double cos_irradiance,
                 double cos_incidence, const OpticalParams& optical, double m,
                 double reflectivity) {
  const double cos_fov = std::cos(optical.fov_deg * kDegToRad);
  if (cos_incidence < cos_fov || cos_incidence < 0.0) return 0.0;
  if (cos_irradiance <= 0.0) return 0.0;
  const double gc = optical.refractive_index * optical.refractive_index /
                    (std::sin(optical.fov_deg * kDegToRad) *
                     std::sin(optical.fov_deg * kDegToRad));
  return reflectivity * (m + 1.0) * optical.pd_area_m2 /
         (kTwoPi * total_length * total_length) *
         std::pow(cos_irradiance, m) * cos_incidence * optical.filter_gain * gc;
}

}  // namespace

PathComponent los_path(const Point3& led, const Point3& user,
                       const OpticalParams& optical, double lambertian_m) {
  if (!(lambertian_m > 0.0)) throw DomainError("Lambertian order must be positive");
  const Point3 v = user - led;
  const double d = norm(v);
  if (d == 0.0) throw DegenerateGeometry("receiver coincides with the LED");
  const double cos_irr = -v.z / d;  // from the LED's downward normal
  const double cos_inc = -v.z / d;  // from the receiver's upward normal
  return {path_gain(d, cos_irr, cos_inc, optical, lambertian_m, 1.0),
          d / kSpeedOfLight};
}

PathComponent nlos_path(const Point3& led, const Point3& element,
                        const Point3& user, const OpticalParams& optical,
                        double lambertian_m) {
  if (!(lambertian_m > 0.0)) throw DomainError("Lambertian order must be positive");
  const Point3 a = element - led;
  const Point3 b = user - element;
  const double d_led = norm(a);
  const double d_user = norm(b);
  if (d_led == 0.0 || d_user == 0.0) {
    throw DegenerateGeometry("zero-length segment on a reflected path");
  }
  const double cos_irr = -a.z / d_led;   // LED normal is -z
  const double cos_inc = -b.z / d_user;  // receiver normal is +z
  const double total = d_led + d_user;
  return {path_gain(total, cos_irr, cos_inc, optical, lambertian_m,
                    optical.reflectivity),
          total / kSpeedOfLight};
}

PathSet compute_paths(const Scenario& scenario, const Point3& user) {
  const double m = lambertian_order(scenario.optical.half_power_semi_angle_deg);
  PathSet paths;
  paths.los = los_path(scenario.led, user, scenario.optical, m);
  paths.nlos.reserve(scenario.irs_elements.size());
  for (const Point3& element : scenario.irs_elements) {
    paths.nlos.push_back(
        nlos_path(scenario.led, element, user, scenario.optical, m));
  }
  return paths;
}

std::complex<double> cfr(const PathSet& paths, std::span<const int> active,
                         double f_hz) {
  const double w = kTwoPi * f_hz;
  std::complex<double> q =
      paths.los.gain * std::polar(1.0, -w * paths.los.delay);
  for (int n : active) {
    const PathComponent& p = paths.nlos[static_cast<std::size_t>(n)];
    q += p.gain * std::polar(1.0, -w * p.delay);
  }
  return q;
}

double cfr_power_expanded(const PathSet& paths, std::span<const int> active,
                          double f_hz) {
  const double w = kTwoPi * f_hz;
  const double cross_sign =
      detail::negate_expansion_cross_terms.load(std::memory_order_relaxed)
          ? -1.0
          : 1.0;

  const double g_los = paths.los.gain;
  double power = g_los * g_los;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const PathComponent& pi = paths.nlos[static_cast<std::size_t>(active[i])];
    power += pi.gain * pi.gain;
    power += cross_sign * 2.0 * g_los * pi.gain *
             std::cos(w * (pi.delay - paths.los.delay));
    for (std::size_t u = 0; u < i; ++u) {
      const PathComponent& pu = paths.nlos[static_cast<std::size_t>(active[u])];
      power += cross_sign * 2.0 * pi.gain * pu.gain *
               std::cos(w * (pu.delay - pi.delay));
    }
  }
  return power;
}

}  // namespace lumisec

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace lumisec {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline Point3 operator-(const Point3& a, const Point3& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}

inline double dot(const Point3& a, const Point3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline double norm(const Point3& a) { return std::sqrt(dot(a, a)); }

inline double distance(const Point3& a, const Point3& b) { return norm(a - b); }

/// Room extents; the box is [0,x] x [0,y] x [0,z].
struct RoomDims {
  double x = 5.0;
  double y = 5.0;
  double z = 3.0;
};

/// Optical front-end parameters shared by all receivers.
struct OpticalParams {
  double half_power_semi_angle_deg = 60.0;  // LED semi-angle at half power
  double pd_area_m2 = 1e-4;                 // photodiode physical area
  double pd_responsivity_a_per_w = 0.6;
  double fov_deg = 90.0;                    // receiver field of view
  double refractive_index = 1.5;            // concentrator lens
  double filter_gain = 1.0;
  double reflectivity = 1.0;                // IRS element reflectivity, in [0,1]
};

/// Link-level system parameters.
struct SystemParams {
  double symbol_period_s = 1e-9;
  double optical_power_w = 1.0;
  double noise_psd_a2_per_hz = 1e-21;
  double gap_db = 2.0;             // SNR gap, converted as 10^(dB/10)
  double modulation_scale = 3.2;
};

struct IrsGridSpec {
  int rows = 15;
  int cols = 15;
  double pitch_h_m = 0.30;
  double pitch_v_m = 0.0;  // <= 0 selects the fitted default room.z / (rows + 1)
};

/// Immutable description of the simulated world. Safe to share across threads
/// once constructed.
struct Scenario {
  RoomDims room;
  Point3 led{2.5, 2.5, 3.0};
  Point3 bob;
  std::vector<Point3> eves;
  IrsGridSpec irs;
  std::vector<Point3> irs_elements;  // row-major grid order; canonical index n = i + 1
  OpticalParams optical;
  SystemParams system;

  int n_irs() const { return static_cast<int>(irs_elements.size()); }
  int n_eves() const { return static_cast<int>(eves.size()); }

  /// user 0 is Bob, user j >= 1 is eavesdropper E_j.
  const Point3& user_position(int user) const {
    return user == 0 ? bob : eves.at(static_cast<std::size_t>(user - 1));
  }
};

/// Lays out a rows x cols element lattice on the wall plane x = 0, centered on
/// the wall in y and z. Elements are returned in row-major order, the top row
/// first; this ordering is the canonical element index used everywhere else.
///
/// Throws GridDoesNotFit if the span exceeds the wall extent and DomainError
/// for non-positive counts or pitches.
std::vector<Point3> irs_grid(int rows, int cols, double pitch_h_m,
                             double pitch_v_m, const RoomDims& room);

/// Builds a validated Scenario from a JSON config document (see README for the
/// schema). Missing fields fall back to the canonical defaults; unknown keys
/// are rejected with MalformedConfig. Positions outside the room raise
/// GeometryError.
Scenario build_scenario(const std::string& json_text);

/// build_scenario on the contents of a file.
Scenario load_scenario(const std::string& path);

/// Canonical JSON form of a scenario (defaults filled in). Used for config
/// hashing and golden-file provenance.
std::string scenario_to_json(const Scenario& s);

/// Canonical presets: Bob under the LED with both eavesdroppers near the far
/// corner (best case), and the mirrored layout where the eavesdroppers sit
/// under the LED instead (worst case).
Scenario best_case_scenario(int rows = 15, int cols = 15);
Scenario worst_case_scenario(int rows = 15, int cols = 15);

}  // namespace lumisec

// SPDX-License-Identifier: Apache-2.0

#include "lumisec/scene.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "lumisec/errors.hpp"

namespace lumisec {
namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const char* context,
                         std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw MalformedConfig(std::string("unknown key '") + item.key() +
                            "' in " + context);
    }
  }
}

double get_number(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) {
    throw MalformedConfig(std::string("field '") + key + "' must be a number");
  }
  return v.get<double>();
}

Point3 parse_point(const json& v, const char* context) {
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() ||
      !v[1].is_number() || !v[2].is_number()) {
    throw MalformedConfig(std::string(context) +
                          " must be an array of three numbers [x, y, z]");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

bool inside_room(const Point3& p, const RoomDims& room) {
  return p.x >= 0.0 && p.x <= room.x && p.y >= 0.0 && p.y <= room.y &&
         p.z >= 0.0 && p.z <= room.z;
}

void require_inside(const Point3& p, const RoomDims& room, const char* what) {
  if (!inside_room(p, room)) {
    std::ostringstream msg;
    msg << what << " (" << p.x << ", " << p.y << ", " << p.z
        << ") lies outside the room box";
    throw GeometryError(msg.str());
  }
}

bool same_point(const Point3& a, const Point3& b) {
  return a.x == b.x && a.y == b.y && a.z == b.z;
}

void validate(const Scenario& s) {
  if (s.room.x <= 0.0 || s.room.y <= 0.0 || s.room.z <= 0.0) {
    throw GeometryError("room dimensions must be positive");
  }
  require_inside(s.led, s.room, "LED");
  require_inside(s.bob, s.room, "Bob");
  for (std::size_t j = 0; j < s.eves.size(); ++j) {
    require_inside(s.eves[j], s.room, "eavesdropper");
    if (same_point(s.eves[j], s.bob)) {
      throw GeometryError("eavesdropper position coincides with Bob's");
    }
    for (std::size_t i = 0; i < j; ++i) {
      if (same_point(s.eves[i], s.eves[j])) {
        throw GeometryError("two eavesdroppers share a position");
      }
    }
  }
  for (const Point3& e : s.irs_elements) {
    if (e.x != 0.0) throw GeometryError("IRS element off the x = 0 wall");
    require_inside(e, s.room, "IRS element");
  }

  const OpticalParams& o = s.optical;
  if (!(o.half_power_semi_angle_deg > 0.0 && o.half_power_semi_angle_deg < 90.0))
    throw DomainError("half-power semi-angle must lie in (0, 90) degrees");
  if (!(o.fov_deg > 0.0 && o.fov_deg <= 90.0))
    throw DomainError("field of view must lie in (0, 90] degrees");
  if (!(o.refractive_index >= 1.0))
    throw DomainError("refractive index must be >= 1");
  if (!(o.reflectivity >= 0.0 && o.reflectivity <= 1.0))
    throw DomainError("reflectivity must lie in [0, 1]");
  if (!(o.pd_area_m2 > 0.0)) throw DomainError("PD area must be positive");

  const SystemParams& y = s.system;
  if (!(y.symbol_period_s > 0.0)) throw DomainError("symbol period must be positive");
  if (!(y.optical_power_w > 0.0)) throw DomainError("optical power must be positive");
  if (!(y.noise_psd_a2_per_hz > 0.0)) throw DomainError("noise PSD must be positive");
  if (!(y.modulation_scale > 0.0)) throw DomainError("modulation scale must be positive");
}

OpticalParams parse_optical(const json& obj) {
  reject_unknown_keys(obj, "optical",
                      {"half_power_semi_angle_deg", "pd_area_m2",
                       "pd_responsivity_a_per_w", "fov_deg", "refractive_index",
                       "filter_gain", "reflectivity"});
  OpticalParams o;
  o.half_power_semi_angle_deg =
      get_number(obj, "half_power_semi_angle_deg", o.half_power_semi_angle_deg);
  o.pd_area_m2 = get_number(obj, "pd_area_m2", o.pd_area_m2);
  o.pd_responsivity_a_per_w =
      get_number(obj, "pd_responsivity_a_per_w", o.pd_responsivity_a_per_w);
  o.fov_deg = get_number(obj, "fov_deg", o.fov_deg);
  o.refractive_index = get_number(obj, "refractive_index", o.refractive_index);
  o.filter_gain = get_number(obj, "filter_gain", o.filter_gain);
  o.reflectivity = get_number(obj, "reflectivity", o.reflectivity);
  return o;
}

SystemParams parse_system(const json& obj) {
  reject_unknown_keys(obj, "system",
                      {"symbol_period_ns", "optical_power_w",
                       "noise_psd_a2_per_hz", "gap_db", "modulation_scale"});
  SystemParams y;
  y.symbol_period_s = get_number(obj, "symbol_period_ns", 1.0) * 1e-9;
  y.optical_power_w = get_number(obj, "optical_power_w", y.optical_power_w);
  y.noise_psd_a2_per_hz =
      get_number(obj, "noise_psd_a2_per_hz", y.noise_psd_a2_per_hz);
  y.gap_db = get_number(obj, "gap_db", y.gap_db);
  y.modulation_scale = get_number(obj, "modulation_scale", y.modulation_scale);
  return y;
}

}  // namespace

std::vector<Point3> irs_grid(int rows, int cols, double pitch_h_m,
                             double pitch_v_m, const RoomDims& room) {
  if (rows < 1 || cols < 1) throw DomainError("grid needs rows, cols >= 1");
  if (!(pitch_h_m > 0.0) || !(pitch_v_m > 0.0))
    throw DomainError("grid pitches must be positive");

  const double span_h = (cols - 1) * pitch_h_m;
  const double span_v = (rows - 1) * pitch_v_m;
  if (span_h > room.y || span_v > room.z) {
    std::ostringstream msg;
    msg << "IRS grid span " << span_h << " m x " << span_v
        << " m exceeds wall extent " << room.y << " m x " << room.z << " m";
    throw GridDoesNotFit(msg.str());
  }

  const double y0 = room.y / 2.0 - span_h / 2.0;
  const double z0 = room.z / 2.0 + span_v / 2.0;  // top row first

  std::vector<Point3> elements;
  elements.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      elements.push_back({0.0, y0 + c * pitch_h_m, z0 - r * pitch_v_m});
    }
  }
  return elements;
}

Scenario build_scenario(const std::string& json_text) {
  json cfg;
  try {
    cfg = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw MalformedConfig(std::string("config is not valid JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw MalformedConfig("config root must be an object");
  reject_unknown_keys(cfg, "config",
                      {"room", "led", "bob", "eves", "irs", "optical", "system"});

  Scenario s;
  if (cfg.contains("room")) {
    const json& r = cfg.at("room");
    reject_unknown_keys(r, "room", {"x", "y", "z"});
    s.room.x = get_number(r, "x", s.room.x);
    s.room.y = get_number(r, "y", s.room.y);
    s.room.z = get_number(r, "z", s.room.z);
  }
  s.led = cfg.contains("led") ? parse_point(cfg.at("led"), "led")
                              : Point3{s.room.x / 2.0, s.room.y / 2.0, s.room.z};
  s.bob = cfg.contains("bob") ? parse_point(cfg.at("bob"), "bob")
                              : Point3{2.5, 2.5, 0.75};
  if (cfg.contains("eves")) {
    const json& arr = cfg.at("eves");
    if (!arr.is_array()) throw MalformedConfig("eves must be an array of points");
    for (const json& e : arr) s.eves.push_back(parse_point(e, "eves entry"));
  } else {
    s.eves = {{4.5, 4.5, 0.75}, {4.0, 4.0, 0.75}};
  }

  if (cfg.contains("irs")) {
    const json& g = cfg.at("irs");
    reject_unknown_keys(g, "irs", {"rows", "cols", "pitch_h", "pitch_v"});
    const double rows = get_number(g, "rows", s.irs.rows);
    const double cols = get_number(g, "cols", s.irs.cols);
    if (rows != std::floor(rows) || cols != std::floor(cols)) {
      throw MalformedConfig("irs rows/cols must be integers");
    }
    s.irs.rows = static_cast<int>(rows);
    s.irs.cols = static_cast<int>(cols);
    s.irs.pitch_h_m = get_number(g, "pitch_h", s.irs.pitch_h_m);
    s.irs.pitch_v_m = get_number(g, "pitch_v", s.irs.pitch_v_m);
  }
  if (s.irs.rows < 1 || s.irs.cols < 1)
    throw MalformedConfig("irs rows/cols must be >= 1");
  if (s.irs.pitch_v_m <= 0.0) s.irs.pitch_v_m = s.room.z / (s.irs.rows + 1);

  if (cfg.contains("optical")) s.optical = parse_optical(cfg.at("optical"));
  if (cfg.contains("system")) s.system = parse_system(cfg.at("system"));

  s.irs_elements =
      irs_grid(s.irs.rows, s.irs.cols, s.irs.pitch_h_m, s.irs.pitch_v_m, s.room);
  validate(s);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedConfig("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return build_scenario(buf.str());
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["room"] = {{"x", s.room.x}, {"y", s.room.y}, {"z", s.room.z}};
  j["led"] = {s.led.x, s.led.y, s.led.z};
  j["bob"] = {s.bob.x, s.bob.y, s.bob.z};
  json eves = json::array();
  for (const Point3& e : s.eves) eves.push_back({e.x, e.y, e.z});
  j["eves"] = std::move(eves);
  j["irs"] = {{"rows", s.irs.rows},
              {"cols", s.irs.cols},
              {"pitch_h", s.irs.pitch_h_m},
              {"pitch_v", s.irs.pitch_v_m}};
  j["optical"] = {
      {"half_power_semi_angle_deg", s.optical.half_power_semi_angle_deg},
      {"pd_area_m2", s.optical.pd_area_m2},
      {"pd_responsivity_a_per_w", s.optical.pd_responsivity_a_per_w},
      {"fov_deg", s.optical.fov_deg},
      {"refractive_index", s.optical.refractive_index},
      {"filter_gain", s.optical.filter_gain},
      {"reflectivity", s.optical.reflectivity}};
  j["system"] = {{"symbol_period_ns", s.system.symbol_period_s * 1e9},
                 {"optical_power_w", s.system.optical_power_w},
                 {"noise_psd_a2_per_hz", s.system.noise_psd_a2_per_hz},
                 {"gap_db", s.system.gap_db},
                 {"modulation_scale", s.system.modulation_scale}};
  return j.dump();
}

namespace {

Scenario preset(Point3 bob, std::vector<Point3> eves, int rows, int cols) {
  Scenario s;
  s.bob = bob;
  s.eves = std::move(eves);
  s.irs.rows = rows;
  s.irs.cols = cols;
  s.irs.pitch_v_m = s.room.z / (rows + 1);
  s.irs_elements =
      irs_grid(rows, cols, s.irs.pitch_h_m, s.irs.pitch_v_m, s.room);
  validate(s);
  return s;
}

}  // namespace

Scenario best_case_scenario(int rows, int cols) {
  return preset({2.5, 2.5, 0.75}, {{4.5, 4.5, 0.75}, {4.0, 4.0, 0.75}}, rows,
                cols);
}

Scenario worst_case_scenario(int rows, int cols) {
  return preset({4.5, 4.5, 0.75}, {{2.5, 2.5, 0.75}, {2.0, 2.0, 0.75}}, rows,
                cols);
}

}  // namespace lumisec

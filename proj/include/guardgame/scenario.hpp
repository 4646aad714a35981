#pragma once

// Engagement scenarios: one asset, M interceptors, N threats. JSON I/O with
// units carried in field names, validation, and seeded generation.

#include "guardgame/dynamics.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace guardgame {

/// Scenario validation failure; `what()` starts with the offending field path.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SpeedRange {
  double min_ftps = 0.0;
  double max_ftps = 0.0;
};

struct SpawnGeometry {
  double threat_min_radius_ft = 6000.0;
  double threat_radius_ft = 8000.0;
  double threat_max_elevation_deg = 8.0;
  double interceptor_min_radius_ft = 0.0;
  double interceptor_radius_ft = 500.0;
  double interceptor_max_elevation_deg = 30.0;
};

struct Scenario {
  int schema = 1;
  AgentState asset;
  double asset_speed_cap_ftps = 50.0;
  double asset_accel_limit_g = 0.0;  // non-maneuverable by default

  std::vector<AgentState> interceptors;
  SpeedRange interceptor_speed{1800.0, 2200.0};
  double interceptor_accel_limit_g = 20.0;

  std::vector<AgentState> threats;
  SpeedRange threat_speed{2400.0, 2800.0};
  double threat_accel_limit_g = 30.0;

  SpawnGeometry geometry;
  double capture_radius_ft = 20.0;
  std::uint64_t seed = 0;

  int M() const { return static_cast<int>(interceptors.size()); }
  int N() const { return static_cast<int>(threats.size()); }
};

namespace detail {

inline void check(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw ScenarioError(path + ": " + message);
}

inline void check_state(const AgentState& s, const std::string& path) {
  check(s.axes() == 3, path, "position and velocity must have 3 components");
  check(s.finite(), path, "components must be finite");
}

// Relative slack for range checks, so values written with round-trip
// precision still validate.
inline bool within(double value, double lo, double hi) {
  const double slack = 1e-9 * std::max({1.0, std::abs(lo), std::abs(hi)});
  return value >= lo - slack && value <= hi + slack;
}

}  // namespace detail

inline void validate(const Scenario& s) {
  using detail::check;
  check(s.schema == 1, "schema", "unsupported schema version " + std::to_string(s.schema));
  check(s.M() >= 1, "interceptors", "need at least one interceptor");
  check(s.N() >= 1, "threats", "need at least one threat");
  check(s.M() <= 20, "interceptors", "at most 20 interceptors are supported");
  check(s.capture_radius_ft > 0, "capture_radius_ft", "must be positive");
  check(s.asset_speed_cap_ftps >= 0, "asset.speed_cap_ftps", "must be non-negative");
  check(s.asset_accel_limit_g >= 0, "asset.accel_limit_g", "must be non-negative");
  check(s.interceptor_accel_limit_g > 0, "interceptor_class.accel_limit_g", "must be positive");
  check(s.threat_accel_limit_g > 0, "threat_class.accel_limit_g", "must be positive");
  check(s.interceptor_speed.min_ftps > 0 && s.interceptor_speed.min_ftps <= s.interceptor_speed.max_ftps,
        "interceptor_class.speed_range_ftps", "must be an increasing positive range");
  check(s.threat_speed.min_ftps > 0 && s.threat_speed.min_ftps <= s.threat_speed.max_ftps,
        "threat_class.speed_range_ftps", "must be an increasing positive range");
  const auto& g = s.geometry;
  check(g.threat_radius_ft > 0 && g.threat_min_radius_ft >= 0 && g.threat_min_radius_ft <= g.threat_radius_ft,
        "geometry.threat_radius_ft", "must be positive and at least the minimum radius");
  check(g.interceptor_radius_ft > 0 && g.interceptor_min_radius_ft >= 0 &&
            g.interceptor_min_radius_ft <= g.interceptor_radius_ft,
        "geometry.interceptor_radius_ft", "must be positive and at least the minimum radius");

  detail::check_state(s.asset, "asset");
  check(detail::within(s.asset.velocity.norm(), 0.0, s.asset_speed_cap_ftps), "asset.velocity_ftps",
        "speed exceeds the asset speed cap");
  for (int i = 0; i < s.M(); ++i) {
    const std::string path = "interceptors[" + std::to_string(i) + "]";
    detail::check_state(s.interceptors[i], path);
    const double r = (s.interceptors[i].position - s.asset.position).norm();
    check(detail::within(r, 0.0, g.interceptor_radius_ft), path + ".position_ft",
          "distance " + std::to_string(r) + " ft from the asset exceeds the interceptor radius");
    check(detail::within(s.interceptors[i].velocity.norm(), s.interceptor_speed.min_ftps, s.interceptor_speed.max_ftps),
          path + ".velocity_ftps", "speed outside the interceptor speed range");
  }
  for (int j = 0; j < s.N(); ++j) {
    const std::string path = "threats[" + std::to_string(j) + "]";
    detail::check_state(s.threats[j], path);
    const double r = (s.threats[j].position - s.asset.position).norm();
    check(detail::within(r, 0.0, g.threat_radius_ft), path + ".position_ft",
          "distance " + std::to_string(r) + " ft from the asset exceeds the threat radius");
    check(detail::within(s.threats[j].velocity.norm(), s.threat_speed.min_ftps, s.threat_speed.max_ftps),
          path + ".velocity_ftps", "speed outside the threat speed range");
  }
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline nlohmann::json to_json_vec(const VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline VectorXd vec_from_json(const nlohmann::json& j, const std::string& path) {
  check(j.is_array(), path, "expected an array of numbers");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    check(j[i].is_number(), path, "expected an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline const nlohmann::json& field(const nlohmann::json& j, const char* key, const std::string& path) {
  check(j.is_object(), path, "expected an object");
  auto it = j.find(key);
  check(it != j.end(), path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

inline double number(const nlohmann::json& j, const char* key, const std::string& path) {
  const auto& v = field(j, key, path);
  const std::string p = path.empty() ? key : path + "." + key;
  check(v.is_number(), p, "expected a number");
  return v.get<double>();
}

inline double number_or(const nlohmann::json& j, const char* key, double fallback, const std::string& path) {
  return j.contains(key) ? number(j, key, path) : fallback;
}

inline nlohmann::json state_json(const AgentState& s) {
  return {{"position_ft", to_json_vec(s.position)}, {"velocity_ftps", to_json_vec(s.velocity)}};
}

inline AgentState state_from_json(const nlohmann::json& j, const std::string& path) {
  VectorXd p = vec_from_json(field(j, "position_ft", path), path + ".position_ft");
  VectorXd v = vec_from_json(field(j, "velocity_ftps", path), path + ".velocity_ftps");
  check(p.size() == v.size(), path, "position and velocity dimensions differ");
  return {std::move(p), std::move(v)};
}

inline SpeedRange range_from_json(const nlohmann::json& j, const std::string& path) {
  VectorXd r = vec_from_json(j, path);
  check(r.size() == 2, path, "expected [min, max]");
  return {r[0], r[1]};
}

}  // namespace detail

inline nlohmann::json scenario_to_json(const Scenario& s) {
  using detail::state_json;
  nlohmann::json j;
  j["schema"] = s.schema;
  j["seed"] = s.seed;
  j["capture_radius_ft"] = s.capture_radius_ft;
  j["asset"] = state_json(s.asset);
  j["asset"]["speed_cap_ftps"] = s.asset_speed_cap_ftps;
  j["asset"]["accel_limit_g"] = s.asset_accel_limit_g;
  j["interceptor_class"] = {{"speed_range_ftps", {s.interceptor_speed.min_ftps, s.interceptor_speed.max_ftps}},
                            {"accel_limit_g", s.interceptor_accel_limit_g}};
  j["threat_class"] = {{"speed_range_ftps", {s.threat_speed.min_ftps, s.threat_speed.max_ftps}},
                       {"accel_limit_g", s.threat_accel_limit_g}};
  const auto& g = s.geometry;
  j["geometry"] = {{"threat_min_radius_ft", g.threat_min_radius_ft},
                   {"threat_radius_ft", g.threat_radius_ft},
                   {"threat_max_elevation_deg", g.threat_max_elevation_deg},
                   {"interceptor_min_radius_ft", g.interceptor_min_radius_ft},
                   {"interceptor_radius_ft", g.interceptor_radius_ft},
                   {"interceptor_max_elevation_deg", g.interceptor_max_elevation_deg}};
  j["interceptors"] = nlohmann::json::array();
  for (const auto& i : s.interceptors) j["interceptors"].push_back(state_json(i));
  j["threats"] = nlohmann::json::array();
  for (const auto& t : s.threats) j["threats"].push_back(state_json(t));
  return j;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  using namespace detail;
  Scenario s;
  const auto& schema = field(j, "schema", "");
  check(schema.is_number_integer(), "schema", "expected an integer");
  s.schema = schema.get<int>();
  check(s.schema == 1, "schema", "unsupported schema version " + std::to_string(s.schema));
  if (j.contains("seed")) {
    check(j["seed"].is_number_unsigned() || j["seed"].is_number_integer(), "seed", "expected an integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  s.capture_radius_ft = number(j, "capture_radius_ft", "");

  const auto& asset = field(j, "asset", "");
  s.asset = state_from_json(asset, "asset");
  s.asset_speed_cap_ftps = number_or(asset, "speed_cap_ftps", s.asset_speed_cap_ftps, "asset");
  s.asset_accel_limit_g = number_or(asset, "accel_limit_g", s.asset_accel_limit_g, "asset");

  const auto& ic = field(j, "interceptor_class", "");
  s.interceptor_speed = range_from_json(field(ic, "speed_range_ftps", "interceptor_class"),
                                        "interceptor_class.speed_range_ftps");
  s.interceptor_accel_limit_g = number(ic, "accel_limit_g", "interceptor_class");
  const auto& tc = field(j, "threat_class", "");
  s.threat_speed = range_from_json(field(tc, "speed_range_ftps", "threat_class"), "threat_class.speed_range_ftps");
  s.threat_accel_limit_g = number(tc, "accel_limit_g", "threat_class");

  if (j.contains("geometry")) {
    const auto& g = j["geometry"];
    auto& out = s.geometry;
    out.threat_min_radius_ft = number_or(g, "threat_min_radius_ft", out.threat_min_radius_ft, "geometry");
    out.threat_radius_ft = number_or(g, "threat_radius_ft", out.threat_radius_ft, "geometry");
    out.threat_max_elevation_deg = number_or(g, "threat_max_elevation_deg", out.threat_max_elevation_deg, "geometry");
    out.interceptor_min_radius_ft = number_or(g, "interceptor_min_radius_ft", out.interceptor_min_radius_ft, "geometry");
    out.interceptor_radius_ft = number_or(g, "interceptor_radius_ft", out.interceptor_radius_ft, "geometry");
    out.interceptor_max_elevation_deg =
        number_or(g, "interceptor_max_elevation_deg", out.interceptor_max_elevation_deg, "geometry");
  }

  const auto& ints = field(j, "interceptors", "");
  check(ints.is_array(), "interceptors", "expected an array");
  for (std::size_t i = 0; i < ints.size(); ++i) {
    s.interceptors.push_back(state_from_json(ints[i], "interceptors[" + std::to_string(i) + "]"));
  }
  const auto& thr = field(j, "threats", "");
  check(thr.is_array(), "threats", "expected an array");
  for (std::size_t i = 0; i < thr.size(); ++i) {
    s.threats.push_back(state_from_json(thr[i], "threats[" + std::to_string(i) + "]"));
  }
  validate(s);
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path + ": cannot open scenario file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError(path + ": " + e.what());
  }
  return scenario_from_json(j);
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ScenarioError(path + ": cannot write scenario file");
  out << scenario_to_json(s).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Generation

namespace detail {

/// Uniform in [0, 1) from the top 53 bits; independent of the standard
/// library's distribution implementations.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit_uniform(rng); }

/// Point at a range drawn uniformly over the annulus area, uniform azimuth,
/// and elevation uniform in [0, max_elevation].
inline Eigen::Vector3d spawn_point(std::mt19937_64& rng, double r_min, double r_max, double max_elevation_deg) {
  const double r = std::sqrt(uniform(rng, r_min * r_min, r_max * r_max));
  const double az = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double el = uniform(rng, 0.0, max_elevation_deg) * std::numbers::pi / 180.0;
  return {r * std::cos(el) * std::cos(az), r * std::cos(el) * std::sin(az), r * std::sin(el)};
}

}  // namespace detail

/// Threats fly straight at the asset; interceptor i is launched at threat
/// i mod N. Deterministic in `seed`.
inline Scenario generate_scenario(std::uint64_t seed, int M, int N, const SpawnGeometry& geometry = {},
                                  const Scenario& classes = {}) {
  if (M < 1 || N < 1) throw std::invalid_argument("generate_scenario: M and N must be >= 1");
  Scenario s = classes;
  s.seed = seed;
  s.geometry = geometry;
  s.interceptors.clear();
  s.threats.clear();
  std::mt19937_64 rng(seed);

  const double heading = detail::uniform(rng, 0.0, 2.0 * std::numbers::pi);
  s.asset = AgentState(Eigen::Vector3d::Zero(),
                       Eigen::Vector3d(std::cos(heading), std::sin(heading), 0.0) * s.asset_speed_cap_ftps);

  for (int j = 0; j < N; ++j) {
    const Eigen::Vector3d p = s.asset.position +
                              detail::spawn_point(rng, geometry.threat_min_radius_ft, geometry.threat_radius_ft,
                                                  geometry.threat_max_elevation_deg);
    const double speed = detail::uniform(rng, s.threat_speed.min_ftps, s.threat_speed.max_ftps);
    const Eigen::Vector3d dir = (Eigen::Vector3d(s.asset.position) - p).normalized();
    s.threats.emplace_back(p, dir * speed);
  }
  for (int i = 0; i < M; ++i) {
    const Eigen::Vector3d p =
        s.asset.position + detail::spawn_point(rng, geometry.interceptor_min_radius_ft, geometry.interceptor_radius_ft,
                                               geometry.interceptor_max_elevation_deg);
    const double speed = detail::uniform(rng, s.interceptor_speed.min_ftps, s.interceptor_speed.max_ftps);
    const Eigen::Vector3d target = s.threats[static_cast<std::size_t>(i % N)].position;
    const Eigen::Vector3d dir = (target - p).normalized();
    s.interceptors.emplace_back(p, dir * speed);
  }
  validate(s);
  return s;
}

}  // namespace guardgame

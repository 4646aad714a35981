#pragma once

// End-to-end run: reward matrix, assignment, and re-rolled assigned
// engagements, with report export and trajectory replay checks.

#include "guardgame/assignment.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace guardgame {

struct ThreatOutcome {
  int threat = 0;  // 1-based
  bool assigned = false;
  bool feasible = false;
  int group = 0;  // 1-based k
  std::vector<int> members;
  int horizon_steps = 0;
  double horizon_s = 0.0;
  int emphasis_index = -1;
  VectorXd emphasis;
  int capturing_interceptor = 0;  // 1-based id
  double miss_ft = std::numeric_limits<double>::infinity();
  double intercept_distance_ft = 0.0;
  bool captured = false;
  Trajectory trajectory;
  std::vector<std::string> agent_ids;

  std::string trajectory_file() const { return "trajectory_T" + std::to_string(threat) + ".csv"; }
};

struct RunTimings {
  double reward_matrix_s = 0.0;
  double assignment_s = 0.0;
  double rollout_s = 0.0;
};

struct RunReport {
  Scenario scenario;
  SweepConfig config;
  RewardMatrix rewards;
  AssignmentSolution assignment;
  std::vector<ThreatOutcome> threats;
  RunTimings timings;

  bool all_threats_covered() const {
    return std::all_of(threats.begin(), threats.end(), [](const ThreatOutcome& t) { return t.assigned; });
  }
  bool all_threats_captured() const {
    return std::all_of(threats.begin(), threats.end(), [](const ThreatOutcome& t) { return t.captured; });
  }
};

inline std::vector<std::string> agent_ids_for(const GroupIndex& g, int threat) {
  std::vector<std::string> ids{"E"};
  for (int id : g.members) ids.push_back("I" + std::to_string(id));
  ids.push_back("T" + std::to_string(threat));
  return ids;
}

/// Re-rolls one assigned cell with its stored (d, H).
inline ThreatOutcome roll_assigned(const Scenario& s, const SweepConfig& c, const RewardMatrix& r,
                                   const AssignedPair& p) {
  ThreatOutcome out;
  const GroupIndex& g = r.groups[static_cast<std::size_t>(p.column)];
  const CellProvenance& cell = r.cell(p.threat, p.column);
  out.threat = p.threat + 1;
  out.assigned = true;
  out.group = g.k;
  out.members = g.members;
  out.agent_ids = agent_ids_for(g, out.threat);
  if (!cell.feasible) return out;

  const RewardProblem problem = reward_problem(s, c);
  const int m = g.size();
  const StackedState x0 = stack_state(s.asset, group_states(s, g), s.threats[static_cast<std::size_t>(p.threat)]);
  const EmphasisVector d(cell.emphasis);
  std::string error;
  auto traj = predict_engagement(problem, x0, m, d, default_threat_emphasis(m, c.emphasis), cell.best_horizon,
                                 nullptr, &error);
  if (!traj) throw NumericalError("re-roll of threat " + std::to_string(out.threat) + " failed: " + error);
  const CaptureOutcome capture = assess_capture(*traj, problem.capture_radius);
  out.feasible = true;
  out.horizon_steps = cell.best_horizon;
  out.horizon_s = cell.best_horizon * c.sample_time;
  out.emphasis_index = cell.emphasis_index;
  out.emphasis = cell.emphasis;
  out.capturing_interceptor = g.member(capture.capturing_slot);
  out.miss_ft = capture.terminal_miss;
  out.intercept_distance_ft = capture.threat_asset_distance;
  out.captured = capture.captured;
  out.trajectory = std::move(*traj);
  return out;
}

inline RunReport run_pipeline(const Scenario& s, const SweepConfig& c) {
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); };
  validate(s);
  RunReport report;
  report.scenario = s;
  report.config = c;

  auto t0 = clock::now();
  report.rewards = build_reward_matrix(s, c);
  auto t1 = clock::now();
  report.assignment = solve_assignment(report.rewards);
  auto t2 = clock::now();

  std::vector<const AssignedPair*> by_threat(static_cast<std::size_t>(s.N()), nullptr);
  for (const auto& p : report.assignment.pairs) by_threat[static_cast<std::size_t>(p.threat)] = &p;
  for (int j = 0; j < s.N(); ++j) {
    if (const AssignedPair* p = by_threat[static_cast<std::size_t>(j)]) {
      report.threats.push_back(roll_assigned(s, c, report.rewards, *p));
    } else {
      ThreatOutcome none;
      none.threat = j + 1;
      report.threats.push_back(std::move(none));
    }
  }
  auto t3 = clock::now();
  report.timings = {seconds(t0, t1), seconds(t1, t2), seconds(t2, t3)};
  return report;
}

// ---------------------------------------------------------------------------
// Export

inline nlohmann::json sweep_config_to_json(const SweepConfig& c) {
  const auto& w = c.weights;
  const auto& e = c.emphasis;
  return {{"sample_time_s", c.sample_time},
          {"horizons_steps", c.horizons},
          {"rho_u", w.rho_u},
          {"rho_v", w.rho_v},
          {"u_max_ftps2", w.u_max},
          {"threat_normalizing_accel_ftps2", w.threat_normalizing_accel},
          {"r_max_ft", w.r_max},
          {"emphasis",
           {{"asset_weight", e.asset_weight},
            {"interceptor_weight", e.interceptor_weight},
            {"ratio", e.ratio},
            {"threat_asset_weight", e.threat_asset_weight},
            {"threat_interceptor_weight", e.threat_interceptor_weight}}}};
}

/// Deterministic part of the report; timings are written separately.
inline nlohmann::json run_report_to_json(const RunReport& r) {
  nlohmann::json j;
  j["schema"] = 1;
  j["scenario"] = scenario_to_json(r.scenario);
  j["config"] = sweep_config_to_json(r.config);
  j["assignment"] = assignment_to_json(r.assignment, r.rewards, r.config.sample_time);
  j["all_threats_covered"] = r.all_threats_covered();
  j["all_threats_captured"] = r.all_threats_captured();
  j["summary"] = nlohmann::json::array();
  for (const auto& t : r.threats) {
    nlohmann::json e = {{"threat", t.threat}, {"assigned", t.assigned}, {"feasible", t.feasible}};
    if (t.assigned) {
      e["group"] = t.group;
      e["members"] = t.members;
    }
    if (t.feasible) {
      e["horizon_steps"] = t.horizon_steps;
      e["horizon_s"] = t.horizon_s;
      e["emphasis"] = std::vector<double>(t.emphasis.data(), t.emphasis.data() + t.emphasis.size());
      e["capturing_interceptor"] = t.capturing_interceptor;
      e["miss_ft"] = t.miss_ft;
      e["intercept_distance_ft"] = t.intercept_distance_ft;
      e["captured"] = t.captured;
      e["trajectory_csv"] = t.trajectory_file();
      e["agent_ids"] = t.agent_ids;
    }
    j["summary"].push_back(std::move(e));
  }
  return j;
}

inline nlohmann::json timings_to_json(const RunTimings& t) {
  return {{"reward_matrix_s", t.reward_matrix_s}, {"assignment_s", t.assignment_s}, {"rollout_s", t.rollout_s}};
}

inline std::string trajectory_csv(const ThreatOutcome& t) {
  std::ostringstream os;
  write_trajectory_csv(os, t.trajectory, t.agent_ids);
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot write");
  out << text;
}

/// Writes report.json, timings.json and one trajectory CSV per intercepted threat.
inline void write_run_outputs(const RunReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "report.json", run_report_to_json(r).dump(2) + "\n");
  write_text(dir / "timings.json", timings_to_json(r.timings).dump(2) + "\n");
  for (const auto& t : r.threats) {
    if (t.feasible) write_text(dir / t.trajectory_file(), trajectory_csv(t));
  }
}

// ---------------------------------------------------------------------------
// Replay

/// Parses a trajectory CSV back into states and inputs. Agent rows must
/// appear in stacked order (asset, interceptors, threat) at each step.
inline Trajectory read_trajectory_csv(std::istream& in, double sample_time, std::vector<std::string>* agent_ids = nullptr) {
  std::string line;
  if (!std::getline(in, line) || line != "time_s,agent_id,px,py,pz,vx,vy,vz,ux,uy,uz") {
    throw std::runtime_error("trajectory csv: unexpected header");
  }
  struct Row {
    double t;
    std::string id;
    double values[9];
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Row row{};
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 11) throw std::runtime_error("trajectory csv: expected 11 columns");
    row.t = std::stod(cells[0]);
    row.id = cells[1];
    for (int k = 0; k < 9; ++k) row.values[k] = std::strtod(cells[static_cast<std::size_t>(k + 2)].c_str(), nullptr);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("trajectory csv: no rows");
  int agents = 0;
  while (agents < static_cast<int>(rows.size()) && rows[static_cast<std::size_t>(agents)].t == rows[0].t) ++agents;
  if (agents < 3 || rows.size() % static_cast<std::size_t>(agents) != 0) {
    throw std::runtime_error("trajectory csv: inconsistent agent rows");
  }
  const int steps = static_cast<int>(rows.size()) / agents;
  Trajectory traj;
  traj.sample_time = sample_time;
  traj.m = agents - 2;
  traj.n_x = 6;
  if (agent_ids) {
    agent_ids->clear();
    for (int a = 0; a < agents; ++a) agent_ids->push_back(rows[static_cast<std::size_t>(a)].id);
  }
  for (int h = 0; h < steps; ++h) {
    VectorXd x(agents * 6), u((agents - 1) * 3), v(3);
    for (int a = 0; a < agents; ++a) {
      const Row& row = rows[static_cast<std::size_t>(h * agents + a)];
      if (row.id != rows[static_cast<std::size_t>(a)].id) throw std::runtime_error("trajectory csv: agent order changes");
      for (int k = 0; k < 6; ++k) x[a * 6 + k] = row.values[k];
      for (int k = 0; k < 3; ++k) {
        if (a == agents - 1) {
          v[k] = row.values[6 + k];
        } else {
          u[a * 3 + k] = row.values[6 + k];
        }
      }
    }
    traj.states.push_back(std::move(x));
    if (h + 1 < steps) {
      traj.u_inputs.push_back(std::move(u));
      traj.v_inputs.push_back(std::move(v));
    }
  }
  return traj;
}

struct ReplayCheck {
  bool replays = false;
  bool within_limits = false;
  bool summary_consistent = false;
  std::string file;
  bool ok() const { return replays && within_limits && summary_consistent; }
};

/// Replays every trajectory listed in a report directory.
inline std::vector<ReplayCheck> replay_run_outputs(const std::filesystem::path& dir) {
  std::ifstream in(dir / "report.json");
  if (!in) throw std::runtime_error((dir / "report.json").string() + ": cannot open");
  nlohmann::json report;
  in >> report;
  const Scenario s = scenario_from_json(report.at("scenario"));
  const double dt = report.at("config").at("sample_time_s").get<double>();
  const AgentModel model = discretize_double_integrator(dt, 3);
  const SaturationLimits limits{g_to_ftps2(s.asset_accel_limit_g), g_to_ftps2(s.interceptor_accel_limit_g),
                                g_to_ftps2(s.threat_accel_limit_g)};
  std::vector<ReplayCheck> checks;
  for (const auto& e : report.at("summary")) {
    if (!e.at("feasible").get<bool>()) continue;
    ReplayCheck check;
    check.file = e.at("trajectory_csv").get<std::string>();
    std::ifstream csv(dir / check.file);
    if (!csv) throw std::runtime_error((dir / check.file).string() + ": cannot open");
    const Trajectory traj = read_trajectory_csv(csv, dt);
    const EngagementSystem sys = build_engagement_system(model, model, model, traj.m);
    check.replays = replays_exactly(sys, traj);
    check.within_limits = respects_limits(traj, limits.team(traj.m, 3), limits.threat);
    const int H = traj.horizon();
    double miss = std::numeric_limits<double>::infinity();
    for (int slot = 1; slot <= traj.m; ++slot) miss = std::min(miss, traj.miss(H, slot));
    check.summary_consistent = H == e.at("horizon_steps").get<int>() && miss == e.at("miss_ft").get<double>() &&
                               traj.threat_asset_distance(H) == e.at("intercept_distance_ft").get<double>();
    checks.push_back(std::move(check));
  }
  return checks;
}

}  // namespace guardgame

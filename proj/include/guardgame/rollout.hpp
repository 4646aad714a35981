#pragma once

// Closed-loop engagement prediction under saturated game feedback, and the
// per-(threat, group) reward search over emphasis vectors and horizons.

#include "guardgame/dynamics.hpp"
#include "guardgame/lqdg.hpp"
#include "guardgame/weights.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace guardgame {

/// Reward assigned to a (threat, group) pairing with no feasible intercept.
inline constexpr double kInfeasibleReward = -1e9;

inline VectorXd saturate(const VectorXd& command, double limit) {
  return command.cwiseMax(-limit).cwiseMin(limit);
}

/// Per-component limits.
inline VectorXd saturate(const VectorXd& command, const VectorXd& limits) {
  if (limits.size() != command.size()) throw std::invalid_argument("saturate: limit vector size mismatch");
  return command.cwiseMax(-limits).cwiseMin(limits);
}

/// Acceleration limits in ft/s^2.
struct SaturationLimits {
  double asset = 0.0;  // non-maneuverable
  double interceptor = g_to_ftps2(20.0);
  double threat = g_to_ftps2(30.0);

  /// Limits for the stacked team input [u_E; u_I1; ...; u_Im].
  VectorXd team(int m, int n_u) const {
    VectorXd lim(static_cast<Eigen::Index>(m + 1) * n_u);
    lim.head(n_u).setConstant(asset);
    lim.tail(static_cast<Eigen::Index>(m) * n_u).setConstant(interceptor);
    return lim;
  }
};

struct Trajectory {
  std::vector<VectorXd> states;    // h = 0..H
  std::vector<VectorXd> u_inputs;  // h = 0..H-1
  std::vector<VectorXd> v_inputs;  // h = 0..H-1
  double sample_time = 0.0;
  int m = 0;
  int n_x = 0;

  int horizon() const { return static_cast<int>(u_inputs.size()); }
  int agents() const { return m + 2; }

  auto position(int h, int agent) const {
    return states[h].segment(static_cast<Eigen::Index>(agent) * n_x, n_x / 2);
  }
  auto velocity(int h, int agent) const {
    return states[h].segment(static_cast<Eigen::Index>(agent) * n_x + n_x / 2, n_x / 2);
  }
  /// Distance between interceptor slot `slot` (1-based) and the threat at step h.
  double miss(int h, int slot) const { return (position(h, slot) - position(h, m + 1)).norm(); }
  double threat_asset_distance(int h) const { return (position(h, m + 1) - position(h, 0)).norm(); }
};

/// Forward rollout with u(h) = sat(F(h) x(h)), v(h) = sat(G(h) x(h)).
inline Trajectory simulate_engagement(const EngagementSystem& sys, const std::vector<MatrixXd>& F,
                                      const std::vector<MatrixXd>& G, const VectorXd& x0,
                                      const VectorXd& u_limits, double v_limit) {
  if (F.size() != G.size()) throw std::invalid_argument("simulate_engagement: F and G horizons differ");
  if (x0.size() != sys.state_dim() || u_limits.size() != sys.team_input_dim()) {
    throw std::invalid_argument("simulate_engagement: dimension mismatch");
  }
  const int H = static_cast<int>(F.size());
  Trajectory traj;
  traj.sample_time = sys.sample_time;
  traj.m = sys.m;
  traj.n_x = sys.n_x;
  traj.states.reserve(H + 1);
  traj.u_inputs.reserve(H);
  traj.v_inputs.reserve(H);
  traj.states.push_back(x0);
  const VectorXd v_limits = VectorXd::Constant(sys.threat_input_dim(), v_limit);
  for (int h = 0; h < H; ++h) {
    const VectorXd& x = traj.states.back();
    if (F[h].rows() != sys.team_input_dim() || F[h].cols() != sys.state_dim() ||
        G[h].rows() != sys.threat_input_dim() || G[h].cols() != sys.state_dim()) {
      throw std::invalid_argument("simulate_engagement: gain dimension mismatch");
    }
    VectorXd u = saturate(F[h] * x, u_limits);
    VectorXd v = saturate(G[h] * x, v_limits);
    VectorXd next = sys.step(x, u, v);
    if (!next.allFinite()) {
      throw NumericalError("simulate_engagement: non-finite state at step " + std::to_string(h + 1));
    }
    traj.u_inputs.push_back(std::move(u));
    traj.v_inputs.push_back(std::move(v));
    traj.states.push_back(std::move(next));
  }
  return traj;
}

inline Trajectory simulate_engagement(const EngagementSystem& sys, const GainSchedule& gains, const StackedState& x0,
                                      const VectorXd& u_limits, double v_limit) {
  return simulate_engagement(sys, gains.F, gains.G, x0.values, u_limits, v_limit);
}

inline Trajectory simulate_engagement(const EngagementSystem& sys, const GainSchedule& gains, const StackedState& x0,
                                      double u_max, double v_max) {
  return simulate_engagement(sys, gains.F, gains.G, x0.values,
                             VectorXd::Constant(sys.team_input_dim(), u_max), v_max);
}

/// True when every recorded state equals the recursion applied to the
/// previous state and recorded inputs, bit for bit.
inline bool replays_exactly(const EngagementSystem& sys, const Trajectory& traj) {
  if (traj.states.size() != traj.u_inputs.size() + 1 || traj.u_inputs.size() != traj.v_inputs.size()) {
    return false;
  }
  for (std::size_t h = 0; h < traj.u_inputs.size(); ++h) {
    const VectorXd next = sys.step(traj.states[h], traj.u_inputs[h], traj.v_inputs[h]);
    if (next.size() != traj.states[h + 1].size()) return false;
    for (Eigen::Index i = 0; i < next.size(); ++i) {
      if (next[i] != traj.states[h + 1][i]) return false;
    }
  }
  return true;
}

inline bool respects_limits(const Trajectory& traj, const VectorXd& u_limits, double v_limit) {
  for (const auto& u : traj.u_inputs) {
    if (u.size() != u_limits.size() || (u.cwiseAbs().array() > u_limits.array()).any()) return false;
  }
  for (const auto& v : traj.v_inputs) {
    if ((v.cwiseAbs().array() > v_limit).any()) return false;
  }
  return true;
}

/// Writes one row per agent per step: time_s, agent_id, px..pz, vx..vz, ux..uz.
/// The threat row carries v. Rows at the terminal step carry zero input.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<std::string>& agent_ids,
                                 bool header = true) {
  if (static_cast<int>(agent_ids.size()) != traj.agents()) {
    throw std::invalid_argument("write_trajectory_csv: need one id per agent");
  }
  const int axes = traj.n_x / 2;
  if (axes > 3) throw std::invalid_argument("write_trajectory_csv: at most three axes");
  if (header) os << "time_s,agent_id,px,py,pz,vx,vy,vz,ux,uy,uz\n";
  char buf[64];
  auto put = [&](double value) {
    std::snprintf(buf, sizeof buf, ",%.17g", value);
    os << buf;
  };
  for (int h = 0; h <= traj.horizon(); ++h) {
    const double t = h * traj.sample_time;
    for (int a = 0; a < traj.agents(); ++a) {
      std::snprintf(buf, sizeof buf, "%.17g", t);
      os << buf << ',' << agent_ids[a];
      const auto p = traj.position(h, a);
      const auto v = traj.velocity(h, a);
      for (int k = 0; k < 3; ++k) put(k < axes ? p[k] : 0.0);
      for (int k = 0; k < 3; ++k) put(k < axes ? v[k] : 0.0);
      for (int k = 0; k < 3; ++k) {
        double acc = 0.0;
        if (h < traj.horizon() && k < axes) {
          acc = (a == traj.agents() - 1) ? traj.v_inputs[h][k] : traj.u_inputs[h][static_cast<Eigen::Index>(a) * axes + k];
        }
        put(acc);
      }
      os << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Reward search.

/// Agent models for one sample time; all agents are double integrators.
struct EngagementModels {
  AgentModel asset;
  AgentModel interceptor;
  AgentModel threat;

  static EngagementModels double_integrators(double sample_time, int axes) {
    const AgentModel model = discretize_double_integrator(sample_time, axes);
    return {model, model, model};
  }
  int axes() const { return static_cast<int>(asset.input_dim()); }
  double sample_time() const { return asset.sample_time; }
};

/// Everything that is shared by the reward evaluations of one threat.
struct RewardProblem {
  EngagementModels models = EngagementModels::double_integrators(0.01, 3);
  WeightConfig weights;  // m and horizon are overwritten per evaluation
  EmphasisDesign emphasis;
  SaturationLimits limits;
  double capture_radius = 20.0;  // ft
};

/// Team gains F from the Q_F(d) game and threat gains G from the Q_G game.
/// Solved on the single-axis game and scattered to all axes. Returns the
/// diagnostic in `error` when either game is not solvable.
struct EngagementGains {
  std::optional<GainSchedule> gains;
  std::string error;
};

inline EngagementGains solve_engagement_gains(const RewardProblem& problem, int m, const EmphasisVector& d,
                                              const EmphasisVector& d_threat, int horizon,
                                              GainCache* cache = nullptr) {
  const int axes = problem.models.axes();
  const auto axis_model = discretize_double_integrator(problem.models.sample_time(), 1);
  const EngagementSystem axis_sys = build_engagement_system(axis_model, axis_model, axis_model, m);

  WeightConfig config = problem.weights;
  config.m = m;
  config.horizon = horizon;
  config.n_u = axes;
  const TeamObjectives obj = build_team_objectives(config, d, d_threat, 1);

  auto solve = [&](const WeightSet& w) -> CachedGains {
    try {
      LqdgSolution sol = solve_lqdg(axis_sys, w);
      return {std::make_shared<const GainSchedule>(std::move(sol.gains)), {}};
    } catch (const SolvabilityError& e) {
      return {nullptr, e.what()};
    } catch (const NumericalError& e) {
      return {nullptr, e.what()};
    }
  };
  auto get = [&](const WeightSet& w) {
    return cache ? cache->get_or_solve(axis_sys, w, [&] { return solve(w); }) : solve(w);
  };

  const CachedGains team = get(obj.team_game(horizon));
  if (!team.gains) return {std::nullopt, "team game: " + team.error};
  const CachedGains threat = get(obj.threat_game(horizon));
  if (!threat.gains) return {std::nullopt, "threat game: " + threat.error};

  GainSchedule combined;
  combined.F = team.gains->F;
  combined.G = threat.gains->G;
  return {lift_gains(combined, axes), {}};
}

struct CaptureOutcome {
  bool captured = false;
  int capturing_slot = 0;  // 1-based interceptor slot with the smallest terminal miss
  double terminal_miss = std::numeric_limits<double>::infinity();
  double min_miss = std::numeric_limits<double>::infinity();  // over all steps, diagnostic only
  double threat_asset_distance = 0.0;
};

/// Capture is tested at the terminal step only.
inline CaptureOutcome assess_capture(const Trajectory& traj, double capture_radius) {
  CaptureOutcome out;
  const int H = traj.horizon();
  for (int slot = 1; slot <= traj.m; ++slot) {
    const double miss = traj.miss(H, slot);
    if (miss < out.terminal_miss) {
      out.terminal_miss = miss;
      out.capturing_slot = slot;
    }
    for (int h = 0; h <= H; ++h) out.min_miss = std::min(out.min_miss, traj.miss(h, slot));
  }
  out.captured = out.terminal_miss <= capture_radius;
  out.threat_asset_distance = traj.threat_asset_distance(H);
  return out;
}

struct RewardResult {
  double reward = kInfeasibleReward;
  bool feasible = false;
  int best_horizon = 0;
  int best_emphasis_index = -1;
  EmphasisVector best_emphasis;
  int capturing_slot = 0;
  double terminal_miss = std::numeric_limits<double>::infinity();
  double min_miss = std::numeric_limits<double>::infinity();
  Trajectory trajectory;
  int evaluated_pairs = 0;
  int skipped_pairs = 0;
  std::vector<std::string> diagnostics;
};

/// One (d, H) evaluation that captured.
struct RewardCandidate {
  double reward = kInfeasibleReward;
  int horizon = 0;
  int emphasis_index = -1;

  /// Larger reward wins; ties go to the smaller horizon, then the smaller index.
  bool beats(const RewardCandidate& other) const {
    if (reward != other.reward) return reward > other.reward;
    if (horizon != other.horizon) return horizon < other.horizon;
    return emphasis_index < other.emphasis_index;
  }
};

inline std::vector<int> default_horizon_space() {
  std::vector<int> hs;
  for (int h = 25; h <= 300; h += 5) hs.push_back(h);
  return hs;
}

/// Rolls the engagement out under the gains for (d, H).
inline std::optional<Trajectory> predict_engagement(const RewardProblem& problem, const StackedState& x0, int m,
                                                    const EmphasisVector& d, const EmphasisVector& d_threat,
                                                    int horizon, GainCache* cache, std::string* error = nullptr) {
  const EngagementGains g = solve_engagement_gains(problem, m, d, d_threat, horizon, cache);
  if (!g.gains) {
    if (error) *error = g.error;
    return std::nullopt;
  }
  const auto& models = problem.models;
  const EngagementSystem sys = build_engagement_system(models.asset, models.interceptor, models.threat, m);
  return simulate_engagement(sys, g.gains->F, g.gains->G, x0.values, problem.limits.team(m, models.axes()),
                             problem.limits.threat);
}

/// Maximizes the terminal threat-asset distance over (d, H) subject to some
/// interceptor of the group ending within the capture radius of the threat.
inline RewardResult solve_reward(const AgentState& threat, const std::vector<AgentState>& group,
                                 const AgentState& asset, const RewardProblem& problem,
                                 const EmphasisSpace& emphasis_space, const std::vector<int>& horizon_space,
                                 GainCache* cache = nullptr) {
  if (emphasis_space.empty() || horizon_space.empty()) {
    throw std::invalid_argument("solve_reward: emphasis and horizon spaces must be non-empty");
  }
  if (group.empty()) throw std::invalid_argument("solve_reward: empty interceptor group");
  const int m = static_cast<int>(group.size());
  for (const auto& d : emphasis_space) {
    if (d.group_size() != m) throw std::invalid_argument("solve_reward: emphasis vector length must be m+1");
  }
  for (int H : horizon_space) {
    if (H < 1) throw std::invalid_argument("solve_reward: horizons must be >= 1");
  }
  const StackedState x0 = stack_state(asset, group, threat);
  const EmphasisVector d_threat = default_threat_emphasis(m, problem.emphasis);

  RewardResult result;
  RewardCandidate best;
  std::vector<int> horizons = horizon_space;
  std::sort(horizons.begin(), horizons.end());
  horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());

  for (int H : horizons) {
    for (std::size_t di = 0; di < emphasis_space.size(); ++di) {
      std::string error;
      auto traj = predict_engagement(problem, x0, m, emphasis_space[di], d_threat, H, cache, &error);
      if (!traj) {
        ++result.skipped_pairs;
        result.diagnostics.push_back("H=" + std::to_string(H) + " d#" + std::to_string(di) + ": " + error);
        continue;
      }
      ++result.evaluated_pairs;
      const CaptureOutcome outcome = assess_capture(*traj, problem.capture_radius);
      result.min_miss = std::min(result.min_miss, outcome.min_miss);
      if (!outcome.captured) continue;
      const RewardCandidate cand{outcome.threat_asset_distance, H, static_cast<int>(di)};
      if (!result.feasible || cand.beats(best)) {
        best = cand;
        result.feasible = true;
        result.reward = cand.reward;
        result.best_horizon = H;
        result.best_emphasis_index = static_cast<int>(di);
        result.best_emphasis = emphasis_space[di];
        result.capturing_slot = outcome.capturing_slot;
        result.terminal_miss = outcome.terminal_miss;
        result.trajectory = std::move(*traj);
      }
    }
  }
  if (result.evaluated_pairs == 0) {
    result.diagnostics.push_back("no (d, H) pair produced a solvable game");
  }
  return result;
}

}  // namespace guardgame

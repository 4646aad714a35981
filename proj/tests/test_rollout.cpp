#include "oracles.hpp"
#include "random_games.hpp"

#include "guardgame/pipeline.hpp"
#include "guardgame/rollout.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace guardgame;

namespace {

AgentState at(double x, double y, double z, double vx = 0, double vy = 0, double vz = 0) {
  return {Eigen::Vector3d(x, y, z), Eigen::Vector3d(vx, vy, vz)};
}

std::vector<MatrixXd> zeros(int H, Eigen::Index rows, Eigen::Index cols) {
  return std::vector<MatrixXd>(static_cast<std::size_t>(H), MatrixXd::Zero(rows, cols));
}

RewardProblem default_problem() {
  RewardProblem p;
  p.limits.asset = 0.0;
  return p;
}

}  // namespace

TEST(Saturate, Examples) {
  Eigen::Vector3d a(5, -5, 0);
  EXPECT_EQ(saturate(a, 10.0), VectorXd(a));
  const VectorXd b = saturate(Eigen::Vector3d(1609, 0, -1000), 643.48);
  EXPECT_EQ(b, VectorXd(Eigen::Vector3d(643.48, 0, -643.48)));
  std::mt19937_64 rng(83);
  std::normal_distribution<double> g(0.0, 1000.0);
  for (int i = 0; i < 100; ++i) {
    VectorXd c(5);
    for (int k = 0; k < 5; ++k) c[k] = g(rng);
    EXPECT_EQ(saturate(saturate(c, 643.48), 643.48), saturate(c, 643.48));
  }
  EXPECT_THROW(saturate(VectorXd::Zero(3), VectorXd::Ones(2)), std::invalid_argument);
}

TEST(Simulate, StationaryAgentsStayPut) {
  const AgentModel m = discretize_double_integrator(0.01, 3);
  const EngagementSystem sys = build_engagement_system(m, m, m, 2);
  const StackedState x0 = stack_state(at(0, 0, 0), {at(100, 0, 0), at(0, 100, 0)}, at(5000, 0, 500));
  const auto traj = simulate_engagement(sys, zeros(20, 9, 24), zeros(20, 3, 24), x0.values, VectorXd::Constant(9, 600), 900);
  ASSERT_EQ(traj.states.size(), 21u);
  for (const auto& x : traj.states) EXPECT_EQ(x, x0.values);
}

TEST(Simulate, BallisticPropagation) {
  const double dt = 0.01;
  const AgentModel m = discretize_double_integrator(dt, 3);
  const EngagementSystem sys = build_engagement_system(m, m, m, 1);
  const StackedState x0 = stack_state(at(0, 0, 0, 50, 0, 0), {at(0, 0, 0, 2000, 10, 0)}, at(6000, 0, 0, -2500, 0, 0));
  const auto traj = simulate_engagement(sys, zeros(100, 6, 18), zeros(100, 3, 18), x0.values, VectorXd::Constant(6, 1), 1);
  for (int h = 0; h <= 100; ++h) {
    for (int a = 0; a < 3; ++a) {
      const VectorXd expected = x0.position(a) + h * dt * VectorXd(x0.velocity(a));
      EXPECT_LE((VectorXd(traj.position(h, a)) - expected).norm(), 1e-9 * (1 + expected.norm()));
    }
  }
}

TEST(Simulate, UnsaturatedCostEqualsGameValue) {
  std::mt19937_64 rng(89);
  for (int trial = 0; trial < 6; ++trial) {
    const auto g = testgames::engagement_game(rng, 1 + trial % 3, 3, 30 + 10 * trial);
    const auto traj = simulate_engagement(g.sys, g.solution.gains.F, g.solution.gains.G, g.x0,
                                          VectorXd::Constant(g.sys.team_input_dim(), 1e300), 1e300);
    const double J = oracle::open_loop_cost(g.sys.A, g.sys.B_u, g.sys.B_v, g.w, g.x0, traj.u_inputs, traj.v_inputs);
    const double V = game_value(g.solution.riccati, g.x0);
    EXPECT_LE(std::abs(J - V), 1e-8 * std::abs(V));
  }
}

TEST(Simulate, NonFiniteStateNamesStep) {
  const AgentModel m = discretize_double_integrator(0.01, 1);
  const EngagementSystem sys = build_engagement_system(m, m, m, 1);
  const VectorXd x0 = VectorXd::Ones(6);
  auto F = zeros(5, 2, 6);
  F[2](0, 0) = std::numeric_limits<double>::infinity();
  try {
    simulate_engagement(sys, F, zeros(5, 1, 6), x0, VectorXd::Constant(2, std::numeric_limits<double>::infinity()), 1.0);
    FAIL() << "expected a numerical error";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("step 3"), std::string::npos) << e.what();
  }
}

TEST(Simulate, RejectsMismatchedGains) {
  const AgentModel m = discretize_double_integrator(0.01, 1);
  const EngagementSystem sys = build_engagement_system(m, m, m, 1);
  EXPECT_THROW(simulate_engagement(sys, zeros(5, 2, 6), zeros(4, 1, 6), VectorXd::Zero(6), VectorXd::Ones(2), 1.0),
               std::invalid_argument);
  EXPECT_THROW(simulate_engagement(sys, zeros(5, 3, 6), zeros(5, 1, 6), VectorXd::Zero(6), VectorXd::Ones(2), 1.0),
               std::invalid_argument);
}

class PredictedEngagement : public ::testing::Test {
 protected:
  void SetUp() override {
    const RewardProblem p = default_problem();
    const StackedState x0 =
        stack_state(at(0, 0, 0, 50, 0, 0), {at(200, 50, 20, 2000, 0, 100)}, at(6000, 300, 600, -2600, 0, -200));
    const EmphasisSpace D = default_emphasis_space(1, p.emphasis);
    auto t = predict_engagement(p, x0, 1, D[0], default_threat_emphasis(1, p.emphasis), 140, nullptr);
    ASSERT_TRUE(t.has_value());
    traj = std::move(*t);
    const AgentModel m = discretize_double_integrator(0.01, 3);
    sys = build_engagement_system(m, m, m, 1);
    limits = p.limits;
  }
  Trajectory traj;
  EngagementSystem sys;
  SaturationLimits limits;
};

TEST_F(PredictedEngagement, ReplaysBitExactly) {
  EXPECT_TRUE(replays_exactly(sys, traj));
  Trajectory tampered = traj;
  tampered.states[50][3] = std::nextafter(tampered.states[50][3], 1e9);
  EXPECT_FALSE(replays_exactly(sys, tampered));
}

TEST_F(PredictedEngagement, InputsWithinLimits) {
  EXPECT_TRUE(respects_limits(traj, limits.team(1, 3), limits.threat));
  bool saturated = false;
  for (const auto& u : traj.u_inputs) saturated = saturated || (u.tail(3).cwiseAbs().array() == limits.interceptor).any();
  EXPECT_TRUE(saturated);
  for (const auto& u : traj.u_inputs) EXPECT_TRUE(u.head(3).isZero(0));
}

TEST_F(PredictedEngagement, CsvRoundTripIsExact) {
  std::stringstream ss;
  write_trajectory_csv(ss, traj, {"E", "I1", "T1"});
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, "time_s,agent_id,px,py,pz,vx,vy,vz,ux,uy,uz");
  ss.seekg(0);
  std::vector<std::string> ids;
  const Trajectory back = read_trajectory_csv(ss, 0.01, &ids);
  EXPECT_EQ(ids, (std::vector<std::string>{"E", "I1", "T1"}));
  ASSERT_EQ(back.states.size(), traj.states.size());
  for (std::size_t h = 0; h < traj.states.size(); ++h) EXPECT_EQ(back.states[h], traj.states[h]);
  for (std::size_t h = 0; h < traj.u_inputs.size(); ++h) {
    EXPECT_EQ(back.u_inputs[h], traj.u_inputs[h]);
    EXPECT_EQ(back.v_inputs[h], traj.v_inputs[h]);
  }
  EXPECT_TRUE(replays_exactly(sys, back));
}

TEST(SolveReward, ColocatedStartCaptures) {
  const RewardProblem p = default_problem();
  const AgentState threat = at(5000, 0, 0);
  const auto r = solve_reward(threat, {threat}, at(0, 0, 0), p, {default_emphasis_space(1)[0]}, {10});
  ASSERT_TRUE(r.feasible) << (r.diagnostics.empty() ? "" : r.diagnostics.front());
  EXPECT_EQ(r.best_horizon, 10);
  EXPECT_LE(r.terminal_miss, 20.0);
  EXPECT_EQ(r.reward, r.trajectory.threat_asset_distance(10));
  EXPECT_NEAR(r.reward, 5000.0, 20.0);
}

TEST(SolveReward, UnreachableThreatGivesSentinel) {
  const auto r = solve_reward(at(5000, 0, 0), {at(1e6, 0, 0)}, at(0, 0, 0), default_problem(),
                              default_emphasis_space(1), {10, 20, 30});
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.reward, kInfeasibleReward);
  EXPECT_GT(r.evaluated_pairs, 0);
}

TEST(SolveReward, UnsolvablePairsAreSkipped) {
  // A huge asset weight breaks the team's convexity condition.
  const auto r = solve_reward(at(5000, 0, 0), {at(100, 0, 0)}, at(0, 0, 0), default_problem(),
                              {EmphasisVector({1e6, 1.0})}, {200});
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.skipped_pairs, 1);
  EXPECT_EQ(r.evaluated_pairs, 0);
  EXPECT_FALSE(r.diagnostics.empty());
  EXPECT_EQ(r.reward, kInfeasibleReward);
}

TEST(SolveReward, RejectsEmptySearchSets) {
  const RewardProblem p = default_problem();
  EXPECT_THROW(solve_reward(at(0, 0, 0), {at(0, 0, 0)}, at(0, 0, 0), p, {}, {10}), std::invalid_argument);
  EXPECT_THROW(solve_reward(at(0, 0, 0), {at(0, 0, 0)}, at(0, 0, 0), p, default_emphasis_space(1), {}),
               std::invalid_argument);
  EXPECT_THROW(solve_reward(at(0, 0, 0), {at(0, 0, 0)}, at(0, 0, 0), p, default_emphasis_space(2), {10}),
               std::invalid_argument);
}

class GeneratedCell : public ::testing::Test {
 protected:
  void SetUp() override {
    s = generate_scenario(4, 3, 2);
    problem = default_problem();
    group = {s.interceptors[0], s.interceptors[2]};
  }
  RewardResult solve(const EmphasisSpace& D, const std::vector<int>& hs, GainCache* cache = nullptr) const {
    return solve_reward(s.threats[0], group, s.asset, problem, D, hs, cache);
  }
  Scenario s;
  RewardProblem problem;
  std::vector<AgentState> group;
};

TEST_F(GeneratedCell, FeasibleResultSatisfiesCaptureAtTerminalStep) {
  const auto r = solve(default_emphasis_space(2), default_horizon_space());
  ASSERT_TRUE(r.feasible);
  EXPECT_EQ(r.trajectory.horizon(), r.best_horizon);
  const CaptureOutcome c = assess_capture(r.trajectory, problem.capture_radius);
  EXPECT_TRUE(c.captured);
  EXPECT_EQ(c.terminal_miss, r.terminal_miss);
  EXPECT_EQ(c.threat_asset_distance, r.reward);
  EXPECT_GE(r.reward, 0.0);
  EXPECT_LE(r.min_miss, r.terminal_miss);
}

TEST_F(GeneratedCell, SupersetsNeverLowerTheReward) {
  const EmphasisSpace D = default_emphasis_space(2);
  std::vector<int> small{100, 120, 140}, large{80, 100, 110, 120, 130, 140, 160};
  const auto a = solve(D, small), b = solve(D, large);
  EXPECT_GE(b.reward, a.reward);
  const EmphasisSpace D1(D.begin(), D.begin() + 1);
  EXPECT_GE(solve(D, large).reward, solve(D1, large).reward);
}

TEST_F(GeneratedCell, DeterministicAndCacheTransparent) {
  const EmphasisSpace D = default_emphasis_space(2);
  const std::vector<int> hs{90, 110, 130, 150};
  GainCache cache;
  const auto a = solve(D, hs), b = solve(D, hs, &cache), c = solve(D, hs, &cache);
  for (const auto* r : {&b, &c}) {
    EXPECT_EQ(r->reward, a.reward);
    EXPECT_EQ(r->best_horizon, a.best_horizon);
    EXPECT_EQ(r->best_emphasis_index, a.best_emphasis_index);
    ASSERT_EQ(r->trajectory.states.size(), a.trajectory.states.size());
    for (std::size_t h = 0; h < a.trajectory.states.size(); ++h) EXPECT_EQ(r->trajectory.states[h], a.trajectory.states[h]);
  }
  EXPECT_GT(cache.hits(), 0u);
}

TEST(RewardCandidateOrder, TieBreaks) {
  const RewardCandidate base{3000.0, 120, 2};
  EXPECT_TRUE((RewardCandidate{3001.0, 200, 5}).beats(base));
  EXPECT_TRUE((RewardCandidate{3000.0, 110, 5}).beats(base));
  EXPECT_TRUE((RewardCandidate{3000.0, 120, 1}).beats(base));
  EXPECT_FALSE(base.beats(base));
}

TEST(HorizonSpace, DefaultGrid) {
  const auto hs = default_horizon_space();
  EXPECT_EQ(hs.front(), 25);
  EXPECT_EQ(hs.back(), 300);
  EXPECT_EQ(hs.size(), 56u);
}

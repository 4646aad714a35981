#pragma once

// Double-integrator agent models and the stacked asset/interceptor/threat
// engagement system.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace guardgame {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Standard gravity in ft/s^2, used to convert accelerations quoted in G.
inline constexpr double kFeetPerSecondSquaredPerG = 32.174;

inline constexpr double g_to_ftps2(double g) { return g * kFeetPerSecondSquaredPerG; }

/// Position (ft) and velocity (ft/s) of one agent.
struct AgentState {
  VectorXd position;
  VectorXd velocity;

  AgentState() = default;
  AgentState(VectorXd p, VectorXd v) : position(std::move(p)), velocity(std::move(v)) {
    if (position.size() != velocity.size()) {
      throw std::invalid_argument("AgentState: position and velocity dimensions differ");
    }
  }

  /// Packs into [position; velocity].
  static AgentState from_vector(const VectorXd& x) {
    if (x.size() % 2 != 0) {
      throw std::invalid_argument("AgentState: state vector length must be even");
    }
    const Eigen::Index half = x.size() / 2;
    return {x.head(half), x.tail(half)};
  }

  Eigen::Index axes() const { return position.size(); }
  Eigen::Index dimension() const { return 2 * position.size(); }

  VectorXd to_vector() const {
    VectorXd x(dimension());
    x << position, velocity;
    return x;
  }

  bool finite() const { return position.allFinite() && velocity.allFinite(); }

  friend bool operator==(const AgentState& a, const AgentState& b) {
    return a.position == b.position && a.velocity == b.velocity;
  }
};

/// Discrete-time model x(h+1) = state_matrix x(h) + input_matrix u(h).
struct AgentModel {
  MatrixXd state_matrix;
  MatrixXd input_matrix;
  double sample_time = 0.0;

  Eigen::Index state_dim() const { return state_matrix.rows(); }
  Eigen::Index input_dim() const { return input_matrix.cols(); }
};

/// Exact zero-order-hold discretization of p'' = u on `axes` independent axes.
/// State layout is [p_1..p_n, v_1..v_n].
inline AgentModel discretize_double_integrator(double sample_time, int axes) {
  if (!(sample_time >= 0.0) || !std::isfinite(sample_time)) {
    throw std::invalid_argument("discretize_double_integrator: sample_time must be finite and >= 0");
  }
  if (axes < 1) {
    throw std::invalid_argument("discretize_double_integrator: need at least one axis");
  }
  const auto n = static_cast<Eigen::Index>(axes);
  const MatrixXd eye = MatrixXd::Identity(n, n);

  AgentModel model;
  model.sample_time = sample_time;
  model.state_matrix = MatrixXd::Identity(2 * n, 2 * n);
  model.state_matrix.topRightCorner(n, n) = sample_time * eye;
  model.input_matrix = MatrixXd::Zero(2 * n, n);
  model.input_matrix.topRows(n) = (0.5 * sample_time * sample_time) * eye;
  model.input_matrix.bottomRows(n) = sample_time * eye;
  return model;
}

/// Stacked game x(h+1) = A x + B_u u + B_v v for one asset, m interceptors and
/// one threat. Agent blocks are ordered asset, interceptors, threat; u stacks
/// asset then interceptor inputs, v is the threat input.
struct EngagementSystem {
  MatrixXd A;
  MatrixXd B_u;
  MatrixXd B_v;
  int m = 0;
  int n_x = 0;
  int n_u = 0;
  double sample_time = 0.0;

  int agents() const { return m + 2; }
  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index team_input_dim() const { return B_u.cols(); }
  Eigen::Index threat_input_dim() const { return B_v.cols(); }

  /// One step of the stacked recursion. The single place the recursion is
  /// evaluated, so rollouts and replays share rounding.
  VectorXd step(const VectorXd& x, const VectorXd& u, const VectorXd& v) const {
    VectorXd next = A * x;
    next.noalias() += B_u * u;
    next.noalias() += B_v * v;
    return next;
  }
};

inline EngagementSystem build_engagement_system(const AgentModel& asset, const AgentModel& interceptor,
                                                const AgentModel& threat, int m) {
  if (m < 1) {
    throw std::invalid_argument("build_engagement_system: group size must be >= 1");
  }
  for (const AgentModel* model : {&interceptor, &threat}) {
    if (model->state_dim() != asset.state_dim() || model->input_dim() != asset.input_dim() ||
        model->input_matrix.rows() != asset.state_dim()) {
      throw std::invalid_argument("build_engagement_system: agent models have mismatched dimensions");
    }
    if (model->sample_time != asset.sample_time) {
      throw std::invalid_argument("build_engagement_system: agent models have mismatched sample times");
    }
  }
  if (asset.state_matrix.cols() != asset.state_dim() || asset.input_matrix.rows() != asset.state_dim()) {
    throw std::invalid_argument("build_engagement_system: malformed asset model");
  }

  const Eigen::Index nx = asset.state_dim();
  const Eigen::Index nu = asset.input_dim();
  const Eigen::Index q = m + 2;

  EngagementSystem sys;
  sys.m = m;
  sys.n_x = static_cast<int>(nx);
  sys.n_u = static_cast<int>(nu);
  sys.sample_time = asset.sample_time;
  sys.A = MatrixXd::Zero(q * nx, q * nx);
  sys.B_u = MatrixXd::Zero(q * nx, (m + 1) * nu);
  sys.B_v = MatrixXd::Zero(q * nx, nu);

  sys.A.topLeftCorner(nx, nx) = asset.state_matrix;
  sys.B_u.topLeftCorner(nx, nu) = asset.input_matrix;
  for (Eigen::Index i = 1; i <= m; ++i) {
    sys.A.block(i * nx, i * nx, nx, nx) = interceptor.state_matrix;
    sys.B_u.block(i * nx, i * nu, nx, nu) = interceptor.input_matrix;
  }
  sys.A.bottomRightCorner(nx, nx) = threat.state_matrix;
  sys.B_v.bottomRows(nx) = threat.input_matrix;
  return sys;
}

/// Concatenated agent states: asset, interceptors in group order, threat.
struct StackedState {
  VectorXd values;
  int agent_dim = 0;

  int agents() const { return agent_dim == 0 ? 0 : static_cast<int>(values.size() / agent_dim); }

  auto agent(int index) const { return values.segment(static_cast<Eigen::Index>(index) * agent_dim, agent_dim); }
  auto agent(int index) { return values.segment(static_cast<Eigen::Index>(index) * agent_dim, agent_dim); }

  /// Position sub-vector of agent `index`.
  auto position(int index) const {
    return values.segment(static_cast<Eigen::Index>(index) * agent_dim, agent_dim / 2);
  }
  auto velocity(int index) const {
    return values.segment(static_cast<Eigen::Index>(index) * agent_dim + agent_dim / 2, agent_dim / 2);
  }
};

struct UnstackedState {
  AgentState asset;
  std::vector<AgentState> interceptors;
  AgentState threat;
};

inline StackedState stack_state(const AgentState& asset, const std::vector<AgentState>& interceptors,
                                const AgentState& threat) {
  const Eigen::Index nx = asset.dimension();
  if (threat.dimension() != nx) {
    throw std::invalid_argument("stack_state: threat dimension mismatch");
  }
  for (const auto& s : interceptors) {
    if (s.dimension() != nx) {
      throw std::invalid_argument("stack_state: interceptor dimension mismatch");
    }
  }
  const auto q = static_cast<Eigen::Index>(interceptors.size()) + 2;
  StackedState out{VectorXd(q * nx), static_cast<int>(nx)};
  out.values.segment(0, nx) = asset.to_vector();
  for (std::size_t i = 0; i < interceptors.size(); ++i) {
    out.values.segment(static_cast<Eigen::Index>(i + 1) * nx, nx) = interceptors[i].to_vector();
  }
  out.values.segment((q - 1) * nx, nx) = threat.to_vector();
  return out;
}

inline UnstackedState unstack_state(const StackedState& x) {
  if (x.agent_dim <= 0 || x.agent_dim % 2 != 0 || x.values.size() % x.agent_dim != 0 || x.agents() < 2) {
    throw std::invalid_argument("unstack_state: malformed stacked state");
  }
  UnstackedState out;
  const int q = x.agents();
  out.asset = AgentState::from_vector(x.agent(0));
  for (int i = 1; i < q - 1; ++i) {
    out.interceptors.push_back(AgentState::from_vector(x.agent(i)));
  }
  out.threat = AgentState::from_vector(x.agent(q - 1));
  return out;
}

}  // namespace guardgame

#pragma once

// Interceptor groups, the threat-by-group reward matrix, and the exact
// max-min collaborating-agents assignment.

#include "guardgame/parallel.hpp"
#include "guardgame/rollout.hpp"
#include "guardgame/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace guardgame {

/// Group k (1-based) of the canonical enumeration.
struct GroupIndex {
  int k = 0;
  std::vector<int> members;  // 1-based interceptor ids, increasing
  std::uint32_t mask = 0;    // bit i-1 set for interceptor i

  int size() const { return static_cast<int>(members.size()); }
  /// 1-based slot access: member(2) is the group's second interceptor.
  int member(int slot) const { return members.at(static_cast<std::size_t>(slot - 1)); }
};

/// All 2^M - 1 non-empty subsets: by size, then lexicographically.
inline std::vector<GroupIndex> enumerate_groups(int M) {
  if (M < 1 || M > 20) throw std::invalid_argument("enumerate_groups: M must be in 1..20");
  std::vector<GroupIndex> groups;
  groups.reserve((std::size_t{1} << M) - 1);
  std::vector<int> current;
  std::function<void(int, int)> extend = [&](int next, int remaining) {
    if (remaining == 0) {
      GroupIndex g;
      g.k = static_cast<int>(groups.size()) + 1;
      g.members = current;
      for (int id : current) g.mask |= std::uint32_t{1} << (id - 1);
      groups.push_back(std::move(g));
      return;
    }
    for (int id = next; id <= M - remaining + 1; ++id) {
      current.push_back(id);
      extend(id + 1, remaining - 1);
      current.pop_back();
    }
  };
  for (int size = 1; size <= M; ++size) extend(1, size);
  return groups;
}

// ---------------------------------------------------------------------------
// Reward matrix

struct CellProvenance {
  bool feasible = false;
  int best_horizon = 0;
  int emphasis_index = -1;
  VectorXd emphasis;
  int capturing_slot = 0;
  double terminal_miss = std::numeric_limits<double>::infinity();
  double min_miss = std::numeric_limits<double>::infinity();
  int evaluated_pairs = 0;
  int skipped_pairs = 0;
};

struct RewardMatrix {
  int M = 0;
  int N = 0;
  MatrixXd values;  // N x (2^M - 1), ft or the infeasible sentinel
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> feasible;
  std::vector<GroupIndex> groups;
  std::vector<CellProvenance> provenance;  // row-major, j * K + c

  int K() const { return static_cast<int>(groups.size()); }
  const CellProvenance& cell(int j, int c) const { return provenance.at(static_cast<std::size_t>(j * K() + c)); }

  /// Bare matrix without provenance; cells at the sentinel are infeasible.
  static RewardMatrix from_values(int M, const MatrixXd& values) {
    RewardMatrix r;
    r.M = M;
    r.groups = enumerate_groups(M);
    if (values.cols() != r.K() || values.rows() < 1) {
      throw std::invalid_argument("RewardMatrix: need N >= 1 rows and 2^M - 1 columns");
    }
    r.N = static_cast<int>(values.rows());
    r.values = values;
    r.feasible = values.array() != kInfeasibleReward;
    r.provenance.resize(static_cast<std::size_t>(r.N * r.K()));
    for (int j = 0; j < r.N; ++j) {
      for (int c = 0; c < r.K(); ++c) r.provenance[static_cast<std::size_t>(j * r.K() + c)].feasible = r.feasible(j, c);
    }
    return r;
  }
};

struct SweepConfig {
  double sample_time = 0.01;  // s
  WeightConfig weights;
  EmphasisDesign emphasis;
  std::vector<int> horizons = default_horizon_space();
  int threads = 1;
  std::size_t cache_capacity = 8192;
};

/// Reward problem for a scenario: its acceleration limits and capture radius.
inline RewardProblem reward_problem(const Scenario& s, const SweepConfig& c) {
  RewardProblem p;
  p.models = EngagementModels::double_integrators(c.sample_time, 3);
  p.weights = c.weights;
  p.emphasis = c.emphasis;
  p.limits.asset = g_to_ftps2(s.asset_accel_limit_g);
  p.limits.interceptor = g_to_ftps2(s.interceptor_accel_limit_g);
  p.limits.threat = g_to_ftps2(s.threat_accel_limit_g);
  p.capture_radius = s.capture_radius_ft;
  return p;
}

inline std::vector<AgentState> group_states(const Scenario& s, const GroupIndex& g) {
  std::vector<AgentState> out;
  out.reserve(g.members.size());
  for (int id : g.members) out.push_back(s.interceptors.at(static_cast<std::size_t>(id - 1)));
  return out;
}

/// Evaluates every (threat, group) cell. Cells are independent and write to
/// their own slot, so the result does not depend on the thread count.
inline RewardMatrix build_reward_matrix(const Scenario& s, const SweepConfig& c, GainCache* cache = nullptr) {
  validate(s);
  if (c.horizons.empty()) throw std::invalid_argument("build_reward_matrix: empty horizon set");
  if (!(c.sample_time > 0.0)) throw std::invalid_argument("build_reward_matrix: sample time must be positive");
  const RewardProblem problem = reward_problem(s, c);
  RewardMatrix r;
  r.M = s.M();
  r.N = s.N();
  r.groups = enumerate_groups(r.M);
  const int K = r.K();
  r.values = MatrixXd::Constant(r.N, K, kInfeasibleReward);
  r.feasible.setConstant(r.N, K, false);
  r.provenance.resize(static_cast<std::size_t>(r.N * K));

  std::vector<EmphasisSpace> spaces(static_cast<std::size_t>(r.M + 1));
  for (int m = 1; m <= r.M; ++m) spaces[static_cast<std::size_t>(m)] = default_emphasis_space(m, c.emphasis);

  GainCache local(c.cache_capacity);
  GainCache* shared = cache ? cache : &local;

  // Largest groups first so the slowest cells start early.
  std::vector<int> order(static_cast<std::size_t>(r.N * K));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return r.groups[static_cast<std::size_t>(a % K)].size() > r.groups[static_cast<std::size_t>(b % K)].size();
  });

  parallel_for(order.size(), c.threads, [&](std::size_t n) {
    const int idx = order[n];
    const int j = idx / K;
    const int col = idx % K;
    const GroupIndex& g = r.groups[static_cast<std::size_t>(col)];
    const RewardResult res = solve_reward(s.threats[static_cast<std::size_t>(j)], group_states(s, g), s.asset, problem,
                                          spaces[static_cast<std::size_t>(g.size())], c.horizons, shared);
    CellProvenance& p = r.provenance[static_cast<std::size_t>(idx)];
    p.feasible = res.feasible;
    p.best_horizon = res.best_horizon;
    p.emphasis_index = res.best_emphasis_index;
    if (res.feasible) p.emphasis = res.best_emphasis.values();
    p.capturing_slot = res.capturing_slot;
    p.terminal_miss = res.terminal_miss;
    p.min_miss = res.min_miss;
    p.evaluated_pairs = res.evaluated_pairs;
    p.skipped_pairs = res.skipped_pairs;
    r.values(j, col) = res.reward;
    r.feasible(j, col) = res.feasible;
  });
  return r;
}

// ---------------------------------------------------------------------------
// Assignment

enum class Regime {
  kCoverThreats,          // M >= N: every threat gets exactly one group
  kEmployInterceptors,    // M < N: chosen groups partition the interceptors
};

inline Regime regime_for(int M, int N) { return M >= N ? Regime::kCoverThreats : Regime::kEmployInterceptors; }

inline const char* regime_name(Regime r) {
  return r == Regime::kCoverThreats ? "cover_threats" : "employ_interceptors";
}

class InfeasibleAssignment : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AssignedPair {
  int threat = 0;   // 0-based row
  int column = 0;   // 0-based column, group k = column + 1
  friend bool operator==(const AssignedPair&, const AssignedPair&) = default;
};

struct AssignmentSolution {
  Eigen::MatrixXi z;
  double objective = -std::numeric_limits<double>::infinity();
  double reward_sum = 0.0;
  std::vector<AssignedPair> pairs;  // sorted by threat
  Regime regime = Regime::kCoverThreats;
  bool sentinel_objective = false;  // objective is the infeasible sentinel
};

namespace detail {

struct Candidate {
  double objective = -std::numeric_limits<double>::infinity();
  double sum = -std::numeric_limits<double>::infinity();
  std::vector<AssignedPair> pairs;  // sorted by threat
  bool valid = false;

  /// Larger objective, then larger sum, then lexicographically smaller (j, k).
  bool better_than(const Candidate& o) const {
    if (!o.valid) return valid;
    if (objective != o.objective) return objective > o.objective;
    if (sum != o.sum) return sum > o.sum;
    return std::lexicographical_compare(pairs.begin(), pairs.end(), o.pairs.begin(), o.pairs.end(),
                                        [](const AssignedPair& a, const AssignedPair& b) {
                                          if (a.threat != b.threat) return a.threat < b.threat;
                                          return a.column < b.column;
                                        });
  }
};

inline int popcount(std::uint32_t x) { return static_cast<int>(__builtin_popcount(x)); }

/// Depth-first enumeration of feasible assignments, calling visit(pairs,
/// current_min) at each complete one. prune(current_min) cuts subtrees whose
/// running minimum can no longer matter.
class AssignmentSearch {
 public:
  AssignmentSearch(const RewardMatrix& r, Regime regime) : r_(r), regime_(regime) {
    full_ = r.M == 32 ? ~std::uint32_t{0} : ((std::uint32_t{1} << r.M) - 1);
  }

  template <typename Visit, typename Prune>
  void run(Visit&& visit, Prune&& prune) {
    std::vector<AssignedPair> pairs;
    if (regime_ == Regime::kCoverThreats) {
      cover(0, 0, std::numeric_limits<double>::infinity(), pairs, visit, prune);
    } else {
      std::vector<char> threat_used(static_cast<std::size_t>(r_.N), 0);
      employ(0, std::numeric_limits<double>::infinity(), pairs, threat_used, visit, prune);
    }
  }

 private:
  template <typename Visit, typename Prune>
  void cover(int j, std::uint32_t used, double current, std::vector<AssignedPair>& pairs, Visit& visit,
             Prune& prune) {
    if (j == r_.N) {
      visit(pairs, current);
      return;
    }
    const int remaining_threats = r_.N - j - 1;
    for (int c = 0; c < r_.K(); ++c) {
      const std::uint32_t mask = r_.groups[static_cast<std::size_t>(c)].mask;
      if (mask & used) continue;
      if (r_.M - popcount(used | mask) < remaining_threats) continue;
      const double next = std::min(current, r_.values(j, c));
      if (prune(next)) continue;
      pairs.push_back({j, c});
      cover(j + 1, used | mask, next, pairs, visit, prune);
      pairs.pop_back();
    }
  }

  template <typename Visit, typename Prune>
  void employ(std::uint32_t used, double current, std::vector<AssignedPair>& pairs, std::vector<char>& threat_used,
              Visit& visit, Prune& prune) {
    if (used == full_) {
      std::vector<AssignedPair> sorted = pairs;
      std::sort(sorted.begin(), sorted.end(),
                [](const AssignedPair& a, const AssignedPair& b) { return a.threat < b.threat; });
      visit(sorted, current);
      return;
    }
    const std::uint32_t lowest = (~used) & (used + 1);
    for (int c = 0; c < r_.K(); ++c) {
      const std::uint32_t mask = r_.groups[static_cast<std::size_t>(c)].mask;
      if (!(mask & lowest) || (mask & used)) continue;
      for (int j = 0; j < r_.N; ++j) {
        if (threat_used[static_cast<std::size_t>(j)]) continue;
        const double next = std::min(current, r_.values(j, c));
        if (prune(next)) continue;
        threat_used[static_cast<std::size_t>(j)] = 1;
        pairs.push_back({j, c});
        employ(used | mask, next, pairs, threat_used, visit, prune);
        pairs.pop_back();
        threat_used[static_cast<std::size_t>(j)] = 0;
      }
    }
  }

  const RewardMatrix& r_;
  Regime regime_;
  std::uint32_t full_ = 0;
};

inline void check_shape(const RewardMatrix& r) {
  if (r.M < 1 || r.M > 20 || r.N < 1) throw std::invalid_argument("assignment: need 1 <= M <= 20 and N >= 1");
  if (r.values.rows() != r.N || r.values.cols() != r.K() ||
      r.K() != static_cast<int>((std::uint32_t{1} << r.M) - 1)) {
    throw std::invalid_argument("assignment: reward matrix must be N x (2^M - 1)");
  }
  if (!r.values.allFinite()) throw std::invalid_argument("assignment: rewards must be finite");
}

inline AssignmentSolution to_solution(const RewardMatrix& r, Regime regime, const Candidate& best) {
  AssignmentSolution s;
  s.regime = regime;
  s.z = Eigen::MatrixXi::Zero(r.N, r.K());
  for (const auto& p : best.pairs) s.z(p.threat, p.column) = 1;
  s.pairs = best.pairs;
  s.objective = best.objective;
  s.reward_sum = best.sum;
  s.sentinel_objective = best.objective <= kInfeasibleReward;
  return s;
}

inline double pair_sum(const RewardMatrix& r, const std::vector<AssignedPair>& pairs) {
  double sum = 0.0;
  for (const auto& p : pairs) sum += r.values(p.threat, p.column);
  return sum;
}

}  // namespace detail

/// Exact branch-and-bound for max over z of min over assigned pairs of r_jk.
inline AssignmentSolution solve_assignment(const RewardMatrix& r, Regime regime) {
  detail::check_shape(r);
  if (regime == Regime::kCoverThreats && r.N > r.M) {
    throw InfeasibleAssignment("assignment: " + std::to_string(r.N) + " threats cannot be covered by disjoint groups of " +
                               std::to_string(r.M) + " interceptors");
  }
  detail::Candidate best;
  detail::AssignmentSearch search(r, regime);
  // Equal minima stay in the search so the secondary criteria can decide.
  search.run(
      [&](const std::vector<AssignedPair>& pairs, double current) {
        detail::Candidate cand{current, detail::pair_sum(r, pairs), pairs, true};
        if (cand.better_than(best)) best = std::move(cand);
      },
      [&](double current) { return best.valid && current < best.objective; });
  if (!best.valid) throw InfeasibleAssignment("assignment: no feasible assignment exists");
  return detail::to_solution(r, regime, best);
}

inline AssignmentSolution solve_assignment(const RewardMatrix& r) {
  return solve_assignment(r, regime_for(r.M, r.N));
}

/// Largest threshold t such that an assignment using only cells >= t exists,
/// found by bisection over the distinct reward values.
inline double max_min_by_threshold(const RewardMatrix& r, Regime regime) {
  detail::check_shape(r);
  std::vector<double> levels(r.values.data(), r.values.data() + r.values.size());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  auto achievable = [&](double t) {
    bool found = false;
    detail::AssignmentSearch search(r, regime);
    search.run([&](const std::vector<AssignedPair>&, double) { found = true; },
               [&](double current) { return found || current < t; });
    return found;
  };
  if (!achievable(levels.front())) throw InfeasibleAssignment("assignment: no feasible assignment exists");
  std::size_t lo = 0, hi = levels.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    if (achievable(levels[mid])) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return levels[lo];
}

// ---------------------------------------------------------------------------
// Verification

enum class Violation {
  kShape,
  kNotBinary,
  kThreatCoverage,      // row sums
  kGroupReuse,          // column sums
  kInterceptorOverlap,  // an interceptor in two assigned groups
  kInterceptorUnused,   // employ-all regime only
};

struct ViolationEntry {
  Violation kind;
  std::string message;
};

struct AssignmentCheck {
  bool valid = true;
  std::vector<ViolationEntry> violations;
  double objective = -std::numeric_limits<double>::infinity();

  bool has(Violation kind) const {
    return std::any_of(violations.begin(), violations.end(), [&](const ViolationEntry& v) { return v.kind == kind; });
  }
};

inline AssignmentCheck verify_assignment(const Eigen::MatrixXi& z, const RewardMatrix& r, Regime regime) {
  AssignmentCheck out;
  auto fail = [&](Violation kind, std::string msg) {
    out.valid = false;
    out.violations.push_back({kind, std::move(msg)});
  };
  if (z.rows() != r.N || z.cols() != r.K() || r.values.rows() != r.N || r.values.cols() != r.K()) {
    fail(Violation::kShape, "z must be N x (2^M - 1)");
    return out;
  }
  for (int j = 0; j < r.N; ++j) {
    for (int c = 0; c < r.K(); ++c) {
      if (z(j, c) != 0 && z(j, c) != 1) {
        fail(Violation::kNotBinary, "z(" + std::to_string(j + 1) + "," + std::to_string(c + 1) + ") is not binary");
      }
    }
  }
  for (int j = 0; j < r.N; ++j) {
    const int row = z.row(j).sum();
    const bool ok = regime == Regime::kCoverThreats ? row == 1 : row <= 1;
    if (!ok) {
      fail(Violation::kThreatCoverage,
           "threat " + std::to_string(j + 1) + " is assigned " + std::to_string(row) + " groups");
    }
  }
  for (int c = 0; c < r.K(); ++c) {
    const int col = z.col(c).sum();
    if (col > 1) {
      fail(Violation::kGroupReuse, "group " + std::to_string(c + 1) + " pursues " + std::to_string(col) + " threats");
    }
  }
  std::vector<int> uses(static_cast<std::size_t>(r.M), 0);
  for (int j = 0; j < r.N; ++j) {
    for (int c = 0; c < r.K(); ++c) {
      if (z(j, c) != 1) continue;
      for (int id : r.groups[static_cast<std::size_t>(c)].members) ++uses[static_cast<std::size_t>(id - 1)];
      out.objective = std::isinf(out.objective) ? r.values(j, c) : std::min(out.objective, r.values(j, c));
    }
  }
  for (int i = 0; i < r.M; ++i) {
    const int n = uses[static_cast<std::size_t>(i)];
    if (n > 1) {
      fail(Violation::kInterceptorOverlap,
           "interceptor " + std::to_string(i + 1) + " appears in " + std::to_string(n) + " assigned groups");
    }
    if (regime == Regime::kEmployInterceptors && n == 0) {
      fail(Violation::kInterceptorUnused, "interceptor " + std::to_string(i + 1) + " is not employed");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report

inline nlohmann::json reward_matrix_to_json(const RewardMatrix& r, double sample_time) {
  nlohmann::json j;
  j["M"] = r.M;
  j["N"] = r.N;
  j["sentinel_ft"] = kInfeasibleReward;
  j["groups"] = nlohmann::json::array();
  for (const auto& g : r.groups) j["groups"].push_back({{"k", g.k}, {"members", g.members}});
  j["values_ft"] = nlohmann::json::array();
  j["feasible"] = nlohmann::json::array();
  j["cells"] = nlohmann::json::array();
  for (int t = 0; t < r.N; ++t) {
    nlohmann::json values = nlohmann::json::array(), mask = nlohmann::json::array();
    for (int c = 0; c < r.K(); ++c) {
      values.push_back(r.values(t, c));
      mask.push_back(static_cast<bool>(r.feasible(t, c)));
      const CellProvenance& p = r.cell(t, c);
      if (!p.feasible) continue;
      std::vector<double> d(p.emphasis.data(), p.emphasis.data() + p.emphasis.size());
      nlohmann::json cell = {{"threat", t + 1},
                             {"group", c + 1},
                             {"reward_ft", r.values(t, c)},
                             {"best_horizon_steps", p.best_horizon},
                             {"best_horizon_s", p.best_horizon * sample_time},
                             {"emphasis", d}};
      if (p.capturing_slot > 0) {
        cell["capturing_interceptor"] = r.groups[static_cast<std::size_t>(c)].member(p.capturing_slot);
        cell["terminal_miss_ft"] = p.terminal_miss;
      }
      j["cells"].push_back(std::move(cell));
    }
    j["values_ft"].push_back(values);
    j["feasible"].push_back(mask);
  }
  return j;
}

inline nlohmann::json assignment_to_json(const AssignmentSolution& s, const RewardMatrix& r, double sample_time) {
  nlohmann::json j;
  j["regime"] = regime_name(s.regime);
  j["objective_ft"] = s.objective;
  j["reward_sum_ft"] = s.reward_sum;
  j["sentinel_objective"] = s.sentinel_objective;
  j["assigned_pairs"] = nlohmann::json::array();
  for (const auto& p : s.pairs) {
    const GroupIndex& g = r.groups[static_cast<std::size_t>(p.column)];
    const CellProvenance& c = r.cell(p.threat, p.column);
    nlohmann::json e = {{"threat", p.threat + 1},
                        {"group", g.k},
                        {"members", g.members},
                        {"reward_ft", r.values(p.threat, p.column)},
                        {"feasible", c.feasible}};
    if (c.feasible) {
      e["best_horizon_steps"] = c.best_horizon;
      e["best_horizon_s"] = c.best_horizon * sample_time;
      e["emphasis"] = std::vector<double>(c.emphasis.data(), c.emphasis.data() + c.emphasis.size());
    }
    j["assigned_pairs"].push_back(std::move(e));
  }
  j["reward_matrix"] = reward_matrix_to_json(r, sample_time);
  return j;
}

}  // namespace guardgame

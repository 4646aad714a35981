#pragma once

// Finite-horizon, discrete-time, zero-sum linear-quadratic dynamic game.
//
// The team input u minimizes and the threat input v maximizes
//
//   J = 1/2 x(H)' Q_H x(H)
//     + 1/2 sum_{h<H} ( x' Q x + u' R_u u - v' R_v v ).
//
// The backward Riccati recursion below yields the saddle-point feedback
// u*(h) = F(h) x(h), v*(h) = G(h) x(h) whenever, at every step,
// B_u' P(h+1) B_u + R_u > 0 and B_v' P(h+1) B_v - R_v < 0.

#include "guardgame/dynamics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cstdint>
#include <cstring>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace guardgame {

/// Thrown when a definiteness condition of the game fails.
class SolvabilityError : public std::runtime_error {
 public:
  enum class Condition { kTeamNotPositive, kThreatNotNegative };

  SolvabilityError(Condition condition, int step, double eigenvalue)
      : std::runtime_error(describe(condition, step, eigenvalue)),
        condition_(condition),
        step_(step),
        eigenvalue_(eigenvalue) {}

  Condition condition() const { return condition_; }
  int step() const { return step_; }
  double eigenvalue() const { return eigenvalue_; }

 private:
  static std::string describe(Condition condition, int step, double eigenvalue) {
    std::ostringstream os;
    if (condition == Condition::kTeamNotPositive) {
      os << "B_u'P B_u + R_u is not positive definite at step " << step << " (smallest eigenvalue "
         << eigenvalue << ")";
    } else {
      os << "B_v'P B_v - R_v is not negative definite at step " << step << " (largest eigenvalue "
         << eigenvalue << ")";
    }
    return os.str();
  }

  Condition condition_;
  int step_;
  double eigenvalue_;
};

/// Thrown on a singular inner system or non-finite iterate.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WeightSet {
  MatrixXd terminal;  // Q_H
  MatrixXd running;   // Q
  MatrixXd R_u;
  MatrixXd R_v;
  int horizon = 0;
};

struct ConditionMargins {
  double team_min_eigenvalue = 0.0;    // of B_u'PB_u + R_u
  double threat_max_eigenvalue = 0.0;  // of B_v'PB_v - R_v
};

struct RiccatiSolution {
  std::vector<MatrixXd> P;               // h = 0..H
  std::vector<ConditionMargins> margins;  // h = 0..H-1

  bool conditions_ok() const {
    for (const auto& c : margins) {
      if (!(c.team_min_eigenvalue > 0.0) || !(c.threat_max_eigenvalue < 0.0)) return false;
    }
    return true;
  }
};

struct GainSchedule {
  std::vector<MatrixXd> F;  // team gains, h = 0..H-1
  std::vector<MatrixXd> G;  // threat gains, h = 0..H-1

  int horizon() const { return static_cast<int>(F.size()); }
};

struct LqdgSolution {
  GainSchedule gains;
  RiccatiSolution riccati;
};

namespace detail {

inline double symmetry_defect(const MatrixXd& M) {
  const double norm = M.norm();
  if (norm == 0.0) return 0.0;
  return (M - M.transpose()).norm() / norm;
}

inline void require_symmetric(const MatrixXd& M, const char* name) {
  if (M.rows() != M.cols() || symmetry_defect(M) > 1e-10) {
    throw std::invalid_argument(std::string("solve_lqdg: ") + name + " must be square and symmetric");
  }
}

inline void symmetrize(MatrixXd& M) { M = 0.5 * (M + M.transpose()).eval(); }

}  // namespace detail

inline void validate(const EngagementSystem& sys, const WeightSet& w) {
  const Eigen::Index n = sys.state_dim();
  const Eigen::Index nu = sys.team_input_dim();
  const Eigen::Index nv = sys.threat_input_dim();
  if (w.horizon < 1) throw std::invalid_argument("solve_lqdg: horizon must be >= 1");
  if (w.terminal.rows() != n || w.running.rows() != n || w.R_u.rows() != nu || w.R_v.rows() != nv) {
    throw std::invalid_argument("solve_lqdg: weight dimensions do not match the system");
  }
  detail::require_symmetric(w.terminal, "Q_H");
  detail::require_symmetric(w.running, "Q");
  detail::require_symmetric(w.R_u, "R_u");
  detail::require_symmetric(w.R_v, "R_v");
  if (Eigen::LLT<MatrixXd>(w.R_u).info() != Eigen::Success) {
    throw std::invalid_argument("solve_lqdg: R_u must be positive definite");
  }
  if (Eigen::LLT<MatrixXd>(w.R_v).info() != Eigen::Success) {
    throw std::invalid_argument("solve_lqdg: R_v must be positive definite");
  }
}

/// Backward recursion from P(H) = Q_H down to P(0).
inline LqdgSolution solve_lqdg(const EngagementSystem& sys, const WeightSet& w) {
  validate(sys, w);
  const int H = w.horizon;
  const MatrixXd& A = sys.A;
  const MatrixXd& Bu = sys.B_u;
  const MatrixXd& Bv = sys.B_v;
  const Eigen::Index nu = Bu.cols();
  const Eigen::Index nv = Bv.cols();

  LqdgSolution out;
  auto& P = out.riccati.P;
  P.resize(H + 1);
  out.riccati.margins.resize(H);
  out.gains.F.resize(H);
  out.gains.G.resize(H);
  P[H] = w.terminal;

  for (int h = H - 1; h >= 0; --h) {
    const MatrixXd& Pn = P[h + 1];
    const MatrixXd BuP = Bu.transpose() * Pn;  // nu x n
    const MatrixXd BvP = Bv.transpose() * Pn;  // nv x n

    MatrixXd Suu = BuP * Bu + w.R_u;
    MatrixXd Svv = BvP * Bv - w.R_v;
    detail::symmetrize(Suu);
    detail::symmetrize(Svv);
    const MatrixXd Suv = BuP * Bv;
    const MatrixXd Svu = Suv.transpose();

    Eigen::SelfAdjointEigenSolver<MatrixXd> eig_u(Suu, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig_v(Svv, Eigen::EigenvaluesOnly);
    const double lam_u = eig_u.eigenvalues().minCoeff();
    const double lam_v = eig_v.eigenvalues().maxCoeff();
    out.riccati.margins[h] = {lam_u, lam_v};
    if (!(lam_u > 1e-12 * Suu.norm())) {
      throw SolvabilityError(SolvabilityError::Condition::kTeamNotPositive, h, lam_u);
    }
    if (!(lam_v < -1e-12 * Svv.norm())) {
      throw SolvabilityError(SolvabilityError::Condition::kThreatNotNegative, h, lam_v);
    }

    Eigen::LLT<MatrixXd> llt_u(Suu);
    Eigen::LLT<MatrixXd> llt_v(-Svv);
    if (llt_u.info() != Eigen::Success || llt_v.info() != Eigen::Success) {
      throw NumericalError("solve_lqdg: factorization failed at step " + std::to_string(h));
    }
    // Svv^{-1} Y = -(-Svv)^{-1} Y
    const MatrixXd Xu = llt_u.solve(Suv);      // Suu^{-1} Suv
    const MatrixXd Xv = -llt_v.solve(Svu);     // Svv^{-1} Svu
    const MatrixXd Ku = llt_u.solve(BuP);      // Suu^{-1} B_u'P
    const MatrixXd Kv = -llt_v.solve(BvP);     // Svv^{-1} B_v'P

    Eigen::FullPivLU<MatrixXd> outer_u(MatrixXd::Identity(nu, nu) - Xu * Xv);
    Eigen::FullPivLU<MatrixXd> outer_v(MatrixXd::Identity(nv, nv) - Xv * Xu);
    if (!outer_u.isInvertible() || !outer_v.isInvertible()) {
      throw NumericalError("solve_lqdg: coupled gain system is singular at step " + std::to_string(h));
    }
    MatrixXd F = outer_u.solve(MatrixXd((Xu * Kv - Ku) * A));
    MatrixXd G = outer_v.solve(MatrixXd((Xv * Ku - Kv) * A));

    const MatrixXd Acl = A + Bu * F + Bv * G;
    MatrixXd Ph = Acl.transpose() * Pn * Acl + w.running + F.transpose() * w.R_u * F -
                  G.transpose() * w.R_v * G;
    detail::symmetrize(Ph);
    if (!Ph.allFinite() || !F.allFinite() || !G.allFinite()) {
      throw NumericalError("solve_lqdg: non-finite Riccati iterate at step " + std::to_string(h));
    }
    P[h] = std::move(Ph);
    out.gains.F[h] = std::move(F);
    out.gains.G[h] = std::move(G);
  }
  return out;
}

/// 1/2 x0' P(0) x0.
inline double game_value(const RiccatiSolution& riccati, const VectorXd& x0) {
  if (riccati.P.empty() || riccati.P.front().rows() != x0.size()) {
    throw std::invalid_argument("game_value: dimension mismatch");
  }
  return 0.5 * x0.dot(riccati.P.front() * x0);
}

inline double game_value(const RiccatiSolution& riccati, const StackedState& x0) {
  return game_value(riccati, x0.values);
}

// ---------------------------------------------------------------------------
// Axis-separable games.
//
// When every agent is an identical double integrator per axis and every
// weight is isotropic across axes, the n_u-axis game is n_u copies of the
// single-axis game. Solving the single-axis game and scattering its gains is
// exact and costs (1/n_u)^3 of the full solve.

/// Maps a single-axis index (block size `block`) to the index for `axes` axes.
inline Eigen::Index lift_index(Eigen::Index i, Eigen::Index block, Eigen::Index axes, Eigen::Index axis) {
  const Eigen::Index group = i / block;
  const Eigen::Index component = i % block;
  return group * block * axes + component * axes + axis;
}

/// Scatters a single-axis matrix into the `axes`-axis layout. Rows and columns
/// are grouped per agent in blocks of `row_block` / `col_block` entries
/// (2 for [p, v] states, 1 for inputs).
inline MatrixXd lift_axis_matrix(const MatrixXd& M, Eigen::Index row_block, Eigen::Index col_block, int axes) {
  MatrixXd out = MatrixXd::Zero(M.rows() * axes, M.cols() * axes);
  for (Eigen::Index k = 0; k < axes; ++k) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      const Eigen::Index jj = lift_index(j, col_block, axes, k);
      for (Eigen::Index i = 0; i < M.rows(); ++i) {
        out(lift_index(i, row_block, axes, k), jj) = M(i, j);
      }
    }
  }
  return out;
}

inline GainSchedule lift_gains(const GainSchedule& single_axis, int axes) {
  GainSchedule out;
  out.F.reserve(single_axis.F.size());
  out.G.reserve(single_axis.G.size());
  for (const auto& F : single_axis.F) out.F.push_back(lift_axis_matrix(F, 1, 2, axes));
  for (const auto& G : single_axis.G) out.G.push_back(lift_axis_matrix(G, 1, 2, axes));
  return out;
}

// ---------------------------------------------------------------------------
// Gain cache: content-addressed by the full game data. Entries hold either
// the gain schedule or the solvability diagnostic, so failing games are not
// re-solved either.

struct CachedGains {
  std::shared_ptr<const GainSchedule> gains;  // null when the game is not solvable
  std::string error;
};

class GainCache {
 public:
  explicit GainCache(std::size_t capacity = 4096) : capacity_(capacity) {}

  template <typename Solver>
  CachedGains get_or_solve(const EngagementSystem& sys, const WeightSet& w, Solver&& solve) {
    std::vector<double> key = make_key(sys, w);
    const std::uint64_t hash = fnv1a(key);
    {
      std::lock_guard lock(mutex_);
      if (auto it = index_.find(hash); it != index_.end()) {
        for (auto* entry : it->second) {
          if (entry->key == key) {
            ++hits_;
            return entry->value;
          }
        }
      }
    }
    CachedGains value = solve();
    std::lock_guard lock(mutex_);
    ++misses_;
    if (auto it = index_.find(hash); it != index_.end()) {
      for (auto* entry : it->second) {
        if (entry->key == key) return entry->value;
      }
    }
    entries_.push_back({hash, std::move(key), value});
    index_[hash].push_back(&entries_.back());
    while (entries_.size() > capacity_) evict_oldest();
    return value;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }
  std::size_t hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
  }
  std::size_t misses() const {
    std::lock_guard lock(mutex_);
    return misses_;
  }

 private:
  struct Entry {
    std::uint64_t hash;
    std::vector<double> key;
    CachedGains value;
  };

  static void append(std::vector<double>& key, const MatrixXd& M) {
    key.push_back(static_cast<double>(M.rows()));
    key.push_back(static_cast<double>(M.cols()));
    key.insert(key.end(), M.data(), M.data() + M.size());
  }

  static std::vector<double> make_key(const EngagementSystem& sys, const WeightSet& w) {
    std::vector<double> key;
    key.push_back(static_cast<double>(w.horizon));
    for (const MatrixXd* M : {&sys.A, &sys.B_u, &sys.B_v, &w.terminal, &w.running, &w.R_u, &w.R_v}) {
      append(key, *M);
    }
    return key;
  }

  static std::uint64_t fnv1a(const std::vector<double>& key) {
    std::uint64_t h = 1469598103934665603ull;
    for (double d : key) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, sizeof bits);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xffu;
        h *= 1099511628211ull;
      }
    }
    return h;
  }

  void evict_oldest() {
    Entry& oldest = entries_.front();
    auto& bucket = index_[oldest.hash];
    std::erase(bucket, &oldest);
    if (bucket.empty()) index_.erase(oldest.hash);
    entries_.pop_front();
  }

  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::list<Entry> entries_;
  std::unordered_map<std::uint64_t, std::vector<Entry*>> index_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

}  // namespace guardgame

#pragma once

// Weight matrices for the asset-guarding game: Bryson-normalized input
// weights, the relative-position selector, and emphasis-weighted terminal
// costs for the team and the threat.

#include "guardgame/dynamics.hpp"
#include "guardgame/lqdg.hpp"

#include <stdexcept>
#include <utility>
#include <vector>

namespace guardgame {

/// Positive weights on the terminal relative distances. Entry 0 weights the
/// threat-to-asset distance, entry i (1..m) the miss distance of slot i.
class EmphasisVector {
 public:
  EmphasisVector() = default;
  explicit EmphasisVector(VectorXd d) : d_(std::move(d)) {
    if (d_.size() < 2) throw std::invalid_argument("EmphasisVector: need at least two entries");
    for (Eigen::Index i = 0; i < d_.size(); ++i) {
      if (!(d_[i] > 0.0) || !std::isfinite(d_[i])) {
        throw std::invalid_argument("EmphasisVector: entries must be finite and positive");
      }
    }
  }
  EmphasisVector(std::initializer_list<double> values)
      : EmphasisVector(Eigen::Map<const VectorXd>(values.begin(), static_cast<Eigen::Index>(values.size()))) {}

  const VectorXd& values() const { return d_; }
  Eigen::Index size() const { return d_.size(); }
  int group_size() const { return static_cast<int>(d_.size()) - 1; }
  double operator[](Eigen::Index i) const { return d_[i]; }

  friend bool operator==(const EmphasisVector& a, const EmphasisVector& b) { return a.d_ == b.d_; }

 private:
  VectorXd d_;
};

using EmphasisSpace = std::vector<EmphasisVector>;

struct WeightConfig {
  double rho_u = 1000.0;
  double rho_v = 1000.0;
  double u_max = g_to_ftps2(20.0);  // ft/s^2, normalizes asset and interceptor inputs
  double threat_normalizing_accel = g_to_ftps2(20.0);  // ft/s^2, normalizes the threat input
  double r_max = 20.0;  // ft
  int horizon = 100;    // steps
  int m = 1;
  int n_u = 3;
  int threats = 1;  // threats in the sub-engagement

  void validate() const {
    if (!(rho_u > 0 && rho_v > 0 && u_max > 0 && threat_normalizing_accel > 0 && r_max > 0)) {
      throw std::invalid_argument("WeightConfig: scalars must be strictly positive");
    }
    if (horizon < 1 || m < 1 || n_u < 1 || threats < 1) {
      throw std::invalid_argument("WeightConfig: horizon, m, n_u and threats must be >= 1");
    }
  }
};

/// R_u = rho_u * blkdiag over m+1 agents of alpha/(H u_max^2) I, R_v = rho_v *
/// beta/(H a_T^2) I with alpha = 1/((m+1) n_u), beta = 1/(n n_u). The matrices
/// are laid out for `layout_axes` axes per agent; pass 1 for the single-axis
/// game while keeping the n_u-axis normalization.
inline std::pair<MatrixXd, MatrixXd> build_input_weights(const WeightConfig& c, int layout_axes) {
  c.validate();
  if (layout_axes < 1) throw std::invalid_argument("build_input_weights: layout_axes must be >= 1");
  const double alpha = 1.0 / static_cast<double>((c.m + 1) * c.n_u);
  const double beta = 1.0 / static_cast<double>(c.threats * c.n_u);
  const double H = c.horizon;
  const double team = c.rho_u * alpha / (H * c.u_max * c.u_max);
  const double threat = c.rho_v * beta / (H * c.threat_normalizing_accel * c.threat_normalizing_accel);
  const Eigen::Index nu = (c.m + 1) * layout_axes;
  MatrixXd Ru = team * MatrixXd::Identity(nu, nu);
  MatrixXd Rv = threat * MatrixXd::Identity(layout_axes, layout_axes);
  return {std::move(Ru), std::move(Rv)};
}

inline std::pair<MatrixXd, MatrixXd> build_input_weights(const WeightConfig& c) {
  return build_input_weights(c, c.n_u);
}

/// Maps a stacked state to [p_T - p_E; p_I1 - p_T; ...; p_Im - p_T].
inline MatrixXd build_q_rel(int m, int n_x) {
  if (m < 1) throw std::invalid_argument("build_q_rel: m must be >= 1");
  if (n_x < 2 || n_x % 2 != 0) throw std::invalid_argument("build_q_rel: n_x must be even and positive");
  const Eigen::Index half = n_x / 2;
  const Eigen::Index q = m + 2;
  MatrixXd S = MatrixXd::Zero(half, n_x);
  S.leftCols(half).setIdentity();

  MatrixXd Q = MatrixXd::Zero((m + 1) * half, q * n_x);
  Q.block(0, 0, half, n_x) = -S;
  Q.block(0, (q - 1) * n_x, half, n_x) = S;
  for (Eigen::Index i = 1; i <= m; ++i) {
    Q.block(i * half, i * n_x, half, n_x) = S;
    Q.block(i * half, (q - 1) * n_x, half, n_x) = -S;
  }
  return Q;
}

/// Q_H(d) = Q_rel' blkdiag(-w(d_1), w(d_2), ..., w(d_{m+1})) Q_rel, w(z) = z/r_max^2 I.
inline MatrixXd build_terminal_weight(const EmphasisVector& d, double r_max, int m, int n_x) {
  if (d.size() != m + 1) throw std::invalid_argument("build_terminal_weight: emphasis length must be m+1");
  if (!(r_max > 0.0)) throw std::invalid_argument("build_terminal_weight: r_max must be positive");
  const MatrixXd Qrel = build_q_rel(m, n_x);
  const Eigen::Index half = n_x / 2;
  VectorXd diag((m + 1) * half);
  for (Eigen::Index i = 0; i <= m; ++i) {
    const double sign = (i == 0) ? -1.0 : 1.0;
    diag.segment(i * half, half).setConstant(sign * d[i] / (r_max * r_max));
  }
  MatrixXd QH = Qrel.transpose() * diag.asDiagonal() * Qrel;
  detail::symmetrize(QH);
  return QH;
}

struct TeamObjectives {
  MatrixXd Q_F;  // team terminal weight, Q_H(d)
  MatrixXd Q_G;  // threat terminal weight, Q_H(d_threat)
  MatrixXd Q_running;
  MatrixXd R_u;
  MatrixXd R_v;

  WeightSet team_game(int horizon) const { return {Q_F, Q_running, R_u, R_v, horizon}; }
  WeightSet threat_game(int horizon) const { return {Q_G, Q_running, R_u, R_v, horizon}; }
};

/// Both games share Q = 0 and the input weights; they differ in terminal weight.
inline TeamObjectives build_team_objectives(const WeightConfig& c, const EmphasisVector& d,
                                            const EmphasisVector& d_threat, int layout_axes) {
  c.validate();
  if (d.size() != c.m + 1 || d_threat.size() != c.m + 1) {
    throw std::invalid_argument("build_team_objectives: emphasis vectors must have length m+1");
  }
  const int n_x = 2 * layout_axes;
  TeamObjectives out;
  out.Q_F = build_terminal_weight(d, c.r_max, c.m, n_x);
  out.Q_G = build_terminal_weight(d_threat, c.r_max, c.m, n_x);
  out.Q_running = MatrixXd::Zero(out.Q_F.rows(), out.Q_F.cols());
  std::tie(out.R_u, out.R_v) = build_input_weights(c, layout_axes);
  return out;
}

inline TeamObjectives build_team_objectives(const WeightConfig& c, const EmphasisVector& d,
                                            const EmphasisVector& d_threat) {
  return build_team_objectives(c, d, d_threat, c.n_u);
}

/// How the emphasis search set and the threat's weights are generated.
struct EmphasisDesign {
  double asset_weight = 0.05;        // d_1 for every team emphasis vector
  double interceptor_weight = 1.0;   // baseline d_{i+1}
  double ratio = 100.0;              // emphasized slot gets ratio * interceptor_weight
  double threat_asset_weight = 0.05;
  double threat_interceptor_weight = 0.0005;
  bool scale_asset_with_group = true;  // asset weights scaled by 2/(m+1)

  double asset_scale(int m) const { return scale_asset_with_group ? 2.0 / (m + 1) : 1.0; }

  void validate() const {
    if (!(asset_weight > 0 && interceptor_weight > 0 && ratio > 0 && threat_asset_weight > 0 &&
          threat_interceptor_weight > 0)) {
      throw std::invalid_argument("EmphasisDesign: weights must be positive");
    }
  }
};

/// The uniform vector, then one vector per slot with that slot emphasized.
inline EmphasisSpace default_emphasis_space(int m, const EmphasisDesign& design = {}) {
  design.validate();
  if (m < 1) throw std::invalid_argument("default_emphasis_space: m must be >= 1");
  EmphasisSpace space;
  VectorXd base = VectorXd::Constant(m + 1, design.interceptor_weight);
  base[0] = design.asset_weight * design.asset_scale(m);
  space.emplace_back(base);
  if (design.ratio == 1.0) return space;
  for (int i = 1; i <= m; ++i) {
    VectorXd d = base;
    d[i] = design.ratio * design.interceptor_weight;
    space.emplace_back(d);
  }
  return space;
}

inline EmphasisVector default_threat_emphasis(int m, const EmphasisDesign& design = {}) {
  design.validate();
  VectorXd d = VectorXd::Constant(m + 1, design.threat_interceptor_weight);
  d[0] = design.threat_asset_weight * design.asset_scale(m);
  return EmphasisVector(d);
}

}  // namespace guardgame

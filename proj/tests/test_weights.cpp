#include "oracles.hpp"

#include "guardgame/weights.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace guardgame;

namespace {

std::vector<VectorXd> random_positions(std::mt19937_64& rng, int agents, int axes) {
  std::uniform_real_distribution<double> u(-5000.0, 5000.0);
  std::vector<VectorXd> out;
  for (int a = 0; a < agents; ++a) {
    VectorXd p(axes);
    for (int k = 0; k < axes; ++k) p[k] = u(rng);
    out.push_back(p);
  }
  return out;
}

VectorXd stack_positions(std::mt19937_64& rng, const std::vector<VectorXd>& positions) {
  std::uniform_real_distribution<double> u(-900.0, 900.0);
  const Eigen::Index axes = positions.front().size();
  VectorXd x(static_cast<Eigen::Index>(positions.size()) * 2 * axes);
  for (std::size_t a = 0; a < positions.size(); ++a) {
    x.segment(static_cast<Eigen::Index>(a) * 2 * axes, axes) = positions[a];
    for (Eigen::Index k = 0; k < axes; ++k) x[static_cast<Eigen::Index>(a) * 2 * axes + axes + k] = u(rng);
  }
  return x;
}

}  // namespace

TEST(InputWeights, BrysonDiagonalValue) {
  WeightConfig c;
  c.m = 1;
  c.n_u = 3;
  c.horizon = 100;
  c.u_max = 643.48;
  c.threat_normalizing_accel = 643.48;
  const auto [Ru, Rv] = build_input_weights(c);
  ASSERT_EQ(Ru.rows(), 6);
  const double expected = 1000.0 * (1.0 / 6.0) / (100.0 * 643.48 * 643.48);
  for (int i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(Ru(i, i), expected);
  EXPECT_TRUE((Ru - MatrixXd(Ru.diagonal().asDiagonal())).isZero(0));
  ASSERT_EQ(Rv.rows(), 3);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(Rv(i, i), 1000.0 / (3.0 * 100.0 * 643.48 * 643.48));
}

TEST(InputWeights, TraceNormalization) {
  for (int m = 1; m <= 5; ++m) {
    for (int nu : {1, 2, 3}) {
      WeightConfig c;
      c.m = m;
      c.n_u = nu;
      c.horizon = 150;
      const auto [Ru, Rv] = build_input_weights(c);
      EXPECT_NEAR(Ru.trace() / c.rho_u * c.horizon * c.u_max * c.u_max, 1.0, 1e-12);
      EXPECT_NEAR(Rv.trace() / c.rho_v * c.horizon * c.threat_normalizing_accel * c.threat_normalizing_accel, 1.0,
                  1e-12);
    }
  }
}

TEST(InputWeights, SingleAxisLayoutKeepsFullNormalization) {
  WeightConfig c;
  c.m = 2;
  const auto [R1, V1] = build_input_weights(c, 1);
  const auto [R3, V3] = build_input_weights(c, 3);
  EXPECT_EQ(R1.rows(), 3);
  EXPECT_EQ(R1(0, 0), R3(0, 0));
  EXPECT_EQ(V1(0, 0), V3(0, 0));
}

TEST(InputWeights, RejectsNonPositiveScalars) {
  WeightConfig c;
  c.rho_u = 0.0;
  EXPECT_THROW(build_input_weights(c), std::invalid_argument);
  c = {};
  c.u_max = -1.0;
  EXPECT_THROW(build_input_weights(c), std::invalid_argument);
  c = {};
  c.horizon = 0;
  EXPECT_THROW(build_input_weights(c), std::invalid_argument);
}

TEST(QRel, SelectsRelativePositions) {
  std::mt19937_64 rng(61);
  for (int m = 1; m <= 4; ++m) {
    const auto pos = random_positions(rng, m + 2, 3);
    const VectorXd x = stack_positions(rng, pos);
    const VectorXd y = build_q_rel(m, 6) * x;
    ASSERT_EQ(y.size(), 3 * (m + 1));
    EXPECT_EQ(y.segment(0, 3), VectorXd(pos.back() - pos.front()));
    for (int i = 1; i <= m; ++i) EXPECT_EQ(y.segment(3 * i, 3), VectorXd(pos[i] - pos.back()));
  }
}

TEST(QRel, ColocatedAgentsGiveZero) {
  std::mt19937_64 rng(67);
  const auto base = random_positions(rng, 1, 3).front();
  const VectorXd x = stack_positions(rng, std::vector<VectorXd>(4, base));
  EXPECT_TRUE((build_q_rel(2, 6) * x).isZero(0));
}

TEST(QRel, SparsityPattern) {
  for (int m = 1; m <= 4; ++m) {
    for (int nx : {2, 4, 6}) {
      const MatrixXd Q = build_q_rel(m, nx);
      int nonzero = 0;
      for (Eigen::Index i = 0; i < Q.size(); ++i) {
        const double v = Q.data()[i];
        if (v != 0.0) {
          ++nonzero;
          EXPECT_EQ(std::abs(v), 1.0);
        }
      }
      EXPECT_EQ(nonzero, 2 * (m + 1) * (nx / 2));
    }
  }
  EXPECT_THROW(build_q_rel(1, 5), std::invalid_argument);
  EXPECT_THROW(build_q_rel(0, 6), std::invalid_argument);
}

TEST(TerminalWeight, SingleUnitDistance) {
  VectorXd x = VectorXd::Zero(18);
  x[12] = 20.0;  // threat at (r_max, 0, 0)
  x[6] = 20.0;   // interceptor on the threat
  const MatrixXd QH = build_terminal_weight({1.0, 1.0}, 20.0, 1, 6);
  EXPECT_DOUBLE_EQ(x.dot(QH * x), -1.0);
}

TEST(TerminalWeight, QuadraticFormIdentity) {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> dd(0.01, 100.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 1 + trial % 5;
    const int axes = 1 + trial % 3;
    VectorXd d(m + 1);
    for (int i = 0; i <= m; ++i) d[i] = dd(rng);
    const auto pos = random_positions(rng, m + 2, axes);
    const VectorXd x = stack_positions(rng, pos);
    const double lhs = x.dot(build_terminal_weight(EmphasisVector(d), 20.0, m, 2 * axes) * x);
    const double rhs = oracle::terminal_form(pos, d, 20.0);
    const double scale = std::abs(d[0]) * (pos.back() - pos.front()).squaredNorm() / 400.0 + std::abs(rhs);
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * scale) << "trial " << trial;
  }
}

TEST(TerminalWeight, EmphasizedSlotDominates) {
  VectorXd x = VectorXd::Zero(24);
  x[6] = 30.0;   // interceptor 1 at 30 ft
  x[12] = 30.0;  // interceptor 2 at 30 ft
  const MatrixXd QH = build_terminal_weight({1.0, 100.0, 1.0}, 20.0, 2, 6);
  VectorXd only1 = x, only2 = x;
  only1[12] = 0.0;
  only2[6] = 0.0;
  EXPECT_NEAR(only1.dot(QH * only1), 100.0 * only2.dot(QH * only2), 1e-9);
}

TEST(TerminalWeight, SymmetricIndefiniteAndScaleCovariant) {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> dd(0.01, 10.0);
  for (int m = 1; m <= 4; ++m) {
    VectorXd d(m + 1);
    for (int i = 0; i <= m; ++i) d[i] = dd(rng);
    const MatrixXd QH = build_terminal_weight(EmphasisVector(d), 20.0, m, 6);
    EXPECT_EQ(QH, QH.transpose());
    const VectorXd eig = Eigen::SelfAdjointEigenSolver<MatrixXd>(QH).eigenvalues();
    EXPECT_LT(eig.minCoeff(), 0.0);
    EXPECT_GT(eig.maxCoeff(), 0.0);
    const MatrixXd scaled = build_terminal_weight(EmphasisVector(VectorXd(3.0 * d)), 20.0, m, 6);
    EXPECT_LE((scaled - 3.0 * QH).norm(), 1e-15 * QH.norm());
  }
}

TEST(TerminalWeight, VelocitiesDoNotContribute) {
  std::mt19937_64 rng(79);
  const MatrixXd QH = build_terminal_weight({0.5, 2.0, 3.0}, 20.0, 2, 6);
  const auto pos = random_positions(rng, 4, 3);
  const VectorXd a = stack_positions(rng, pos), b = stack_positions(rng, pos);
  EXPECT_NEAR(a.dot(QH * a), b.dot(QH * b), 1e-9 * std::abs(a.dot(QH * a)));
}

TEST(TerminalWeight, RejectsBadInput) {
  EXPECT_THROW(build_terminal_weight({1.0, 1.0}, 20.0, 2, 6), std::invalid_argument);
  EXPECT_THROW(build_terminal_weight({1.0, 1.0}, 0.0, 1, 6), std::invalid_argument);
  EXPECT_THROW(EmphasisVector({1.0, -1.0}), std::invalid_argument);
  EXPECT_THROW(EmphasisVector({1.0}), std::invalid_argument);
}

TEST(TeamObjectives, Construction) {
  WeightConfig c;
  c.m = 2;
  const auto obj = build_team_objectives(c, {1, 1, 1}, {1, 1, 1});
  EXPECT_EQ(obj.Q_running, MatrixXd::Zero(24, 24));
  EXPECT_EQ(obj.Q_F, obj.Q_G);

  const auto heavy = build_team_objectives(c, {1, 1, 1}, {100, 1, 1});
  VectorXd asset_only = VectorXd::Zero(24), miss_only = VectorXd::Zero(24);
  asset_only[18] = 10.0;                     // threat 10 ft from asset; interceptors on the threat
  asset_only[6] = asset_only[12] = 10.0;
  miss_only[6] = 10.0;                       // interceptor 1 misses by 10 ft
  EXPECT_NEAR(-asset_only.dot(heavy.Q_G * asset_only), 100.0 * miss_only.dot(heavy.Q_G * miss_only), 1e-12);
  EXPECT_EQ(obj.team_game(40).horizon, 40);
  EXPECT_THROW(build_team_objectives(c, {1, 1}, {1, 1, 1}), std::invalid_argument);
}

TEST(EmphasisSpaceDefaults, UniformThenOnePerSlot) {
  EmphasisDesign design;
  design.scale_asset_with_group = false;
  const EmphasisSpace D = default_emphasis_space(3, design);
  ASSERT_EQ(D.size(), 4u);
  EXPECT_EQ(D[0], EmphasisVector({design.asset_weight, 1, 1, 1}));
  for (int i = 1; i <= 3; ++i) {
    for (int k = 1; k <= 3; ++k) EXPECT_EQ(D[i][k], k == i ? design.ratio : 1.0);
    EXPECT_EQ(D[i][0], design.asset_weight);
  }
  design.ratio = 1.0;
  EXPECT_EQ(default_emphasis_space(3, design).size(), 1u);
}

TEST(EmphasisSpaceDefaults, AssetWeightScalesWithGroupSize) {
  const EmphasisDesign design;
  EXPECT_EQ(default_emphasis_space(1, design)[0][0], design.asset_weight);
  EXPECT_DOUBLE_EQ(default_emphasis_space(3, design)[0][0], design.asset_weight / 2.0);
  EXPECT_DOUBLE_EQ(default_threat_emphasis(4, design)[0], design.threat_asset_weight * 2.0 / 5.0);
  EXPECT_EQ(default_threat_emphasis(4, design)[1], design.threat_interceptor_weight);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mareforge/curvature_opt.hpp"
#include "mareforge/error.hpp"
#include "mareforge/qp_solver.hpp"
#include "oracles.hpp"

using namespace mareforge;

namespace {

struct Instance {
  std::vector<double> x, eps;
  double cap = 10.0;
};

Instance random_instance(std::mt19937_64& rng, int n, double cap = 10.0) {
  std::uniform_real_distribution<double> ux(0.0, cap), ue(-0.3 * cap, 0.3 * cap);
  Instance in;
  in.cap = cap;
  for (int i = 0; i < n; ++i) {
    in.x.push_back(ux(rng));
    in.eps.push_back(ue(rng));
  }
  return in;
}

}  // namespace

TEST(SecondDifference, Examples) {
  const std::vector<double> y{1, 4, 9, 16, 25};
  EXPECT_EQ(second_difference(y), (std::vector<double>{2, 2, 2}));
  const std::vector<double> lin{3, 5, 7, 9};
  EXPECT_EQ(second_difference(lin), (std::vector<double>{0, 0}));
  const std::vector<double> two{1, 2};
  EXPECT_THROW(second_difference(two), DomainError);
}

TEST(CurvatureObjective, HandComputed) {
  const std::vector<double> y{0, 1, 0}, x{0, 0, 0}, eps{0, 0.5, 0};
  CurvatureSpec spec;
  spec.d = 1.0;
  spec.w_s = 2.0;
  spec.w_eps = 3.0;
  // fidelity 3 * 0.25, curvature 2 * (|-2| - 1)^2
  EXPECT_DOUBLE_EQ(curvature_objective(y, x, eps, spec), 0.75 + 2.0);
}

TEST(Validate, RejectsBadSpecs) {
  CurvatureSpec spec;
  EXPECT_NO_THROW(spec.validate(10.0));
  spec.w_s = -1.0;
  EXPECT_THROW(spec.validate(10.0), DomainError);
  spec = {};
  spec.w_s = 0.0;
  spec.w_eps = 0.0;
  EXPECT_THROW(spec.validate(10.0), DomainError);
  spec = {};
  spec.d_max = 39.0;
  EXPECT_THROW(spec.validate(10.0), DomainError);
  spec = {};
  spec.gap = -0.1;
  EXPECT_THROW(spec.validate(10.0), DomainError);
}

TEST(Smooth, ZeroCurvatureWeightReturnsClampedPoint) {
  const std::vector<double> x{1, 9, 5, 2}, eps{-2, 3, 0.5, 0};
  CurvatureSpec spec;
  spec.w_s = 0.0;
  const auto sol = smooth({}, x, eps, spec, 10.0);
  EXPECT_EQ(sol.y, (std::vector<double>{0, 10, 5.5, 2}));
}

TEST(Smooth, ZeroTargetWithZeroFidelityWeightGivesZeroObjective) {
  std::mt19937_64 rng(3);
  const auto in = random_instance(rng, 7);
  CurvatureSpec spec;
  spec.d = 0.0;
  spec.w_eps = 0.0;
  spec.gap = 0.0;
  const auto sol = smooth({}, in.x, in.eps, spec, in.cap);
  EXPECT_NEAR(sol.objective, 0.0, 1e-8);
  for (double s : second_difference(sol.y)) EXPECT_NEAR(s, 0.0, 1e-5);
}

TEST(Smooth, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ud(0.0, 3.0), uw(0.1, 5.0);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 3 + trial % 6;
    const auto in = random_instance(rng, n);
    CurvatureSpec spec;
    spec.d = ud(rng);
    spec.w_s = uw(rng);
    spec.w_eps = uw(rng);
    spec.gap = 0.0;
    const auto sol = smooth({}, in.x, in.eps, spec, in.cap);
    const double best = oracle::brute_force_curvature(in.x, in.eps, spec.d, spec.w_s, spec.w_eps, in.cap);
    EXPECT_NEAR(sol.objective, best, 1e-6 * std::max(1.0, best)) << "trial " << trial;
    EXPECT_NEAR(curvature_objective(sol.y, in.x, in.eps, spec), sol.objective, 1e-9 * std::max(1.0, best));
    EXPECT_LE(sol.bound, sol.objective + 1e-12);
  }
}

TEST(Smooth, SolutionIsFeasibleAndMultipliersSplitSecondDifference) {
  std::mt19937_64 rng(5);
  const auto in = random_instance(rng, 30);
  CurvatureSpec spec;
  spec.d = 1.0;
  const auto sol = smooth({}, in.x, in.eps, spec, in.cap);
  ASSERT_EQ(sol.y.size(), in.x.size());
  for (double v : sol.y) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, in.cap);
  }
  const auto s = second_difference(sol.y);
  ASSERT_EQ(sol.lambda_plus.size(), s.size());
  ASSERT_EQ(sol.b.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_GE(sol.lambda_plus[i], 0.0);
    EXPECT_GE(sol.lambda_minus[i], 0.0);
    EXPECT_NEAR(sol.lambda_plus[i] - sol.lambda_minus[i], s[i], 1e-12);
    EXPECT_NEAR(sol.lambda_plus[i] + sol.lambda_minus[i], std::abs(s[i]), 1e-12);
    EXPECT_TRUE(sol.lambda_plus[i] == 0.0 || sol.lambda_minus[i] == 0.0);
  }
  EXPECT_LE(sol.gap_achieved, spec.gap + 1e-12);
}

TEST(Smooth, NeverWorseThanClampedStart) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const auto in = random_instance(rng, 25);
    CurvatureSpec spec;
    spec.d = 0.5;
    const auto sol = smooth({}, in.x, in.eps, spec, in.cap);
    std::vector<double> start(in.x.size());
    for (std::size_t i = 0; i < start.size(); ++i) start[i] = std::clamp(in.x[i] + in.eps[i], 0.0, in.cap);
    EXPECT_LE(sol.objective, curvature_objective(start, in.x, in.eps, spec) + 1e-9);
  }
}

TEST(Smooth, LargerCurvatureWeightPullsTowardTarget) {
  std::mt19937_64 rng(23);
  const auto in = random_instance(rng, 8);
  double prev = std::numeric_limits<double>::infinity();
  for (double ws : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    CurvatureSpec spec;
    spec.d = 0.2;
    spec.w_s = ws;
    spec.gap = 0.0;
    const auto sol = smooth({}, in.x, in.eps, spec, in.cap);
    double dev = 0.0;
    for (double s : second_difference(sol.y)) dev += (std::abs(s) - spec.d) * (std::abs(s) - spec.d);
    EXPECT_LE(dev, prev + 1e-9);
    prev = dev;
  }
}

TEST(Smooth, Deterministic) {
  std::mt19937_64 rng(29);
  const auto in = random_instance(rng, 40);
  CurvatureSpec spec;
  spec.d = 0.7;
  const auto a = smooth({}, in.x, in.eps, spec, in.cap);
  const auto b = smooth({}, in.x, in.eps, spec, in.cap);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.nodes, b.nodes);
}

TEST(QpSolvers, DenseMatchesBarrierOracle) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 6, m = 10;
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = nd(rng);
    const Eigen::MatrixXd G = M * M.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd g(n), x0 = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) g(i) = 5 * nd(rng);
    Eigen::MatrixXd A(m, n);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) A(i, j) = nd(rng);
      b(i) = -1.0 - std::abs(nd(rng));  // x = 0 strictly feasible
    }
    const auto qp = solve_qp(G, g, A, b);
    ASSERT_TRUE(qp.feasible);
    const Eigen::VectorXd ref = oracle::barrier_qp(G, g, A, b, x0);
    const double f_ref = 0.5 * ref.dot(G * ref) + g.dot(ref);
    EXPECT_NEAR(qp.objective, f_ref, 1e-8 * (1 + std::abs(f_ref)));
    EXPECT_GE((A * qp.x - b).minCoeff(), -1e-9);
  }
}

TEST(QpSolvers, SparseMatchesDense) {
  std::mt19937_64 rng(37);
  std::normal_distribution<double> nd;
  const int n = 40, m = 60;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    G(i, i) = 2.0 + std::abs(nd(rng));
    if (i + 1 < n) G(i, i + 1) = G(i + 1, i) = 0.5 * nd(rng);
  }
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) g(i) = 3 * nd(rng);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < 3; ++k) A(i, (i * 7 + k * 3) % n) = nd(rng);
    b(i) = -0.5 - std::abs(nd(rng));
  }
  const auto dense = solve_qp(G, g, A, b);
  const auto sparse = solve_qp_sparse(G.sparseView(), g, A.sparseView(), b);
  ASSERT_TRUE(dense.feasible && sparse.feasible);
  EXPECT_NEAR(dense.objective, sparse.objective, 1e-7 * (1 + std::abs(dense.objective)));
}

TEST(QpSolvers, DetectsInfeasibility) {
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(1, 1);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(1);
  Eigen::MatrixXd A(2, 1);
  A << 1, -1;
  Eigen::VectorXd b(2);
  b << 1, 0;  // x >= 1 and x <= 0
  EXPECT_FALSE(solve_qp(G, g, A, b).feasible);
}

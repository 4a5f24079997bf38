#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "urlsentry/error.hpp"
#include "urlsentry/models/svm.hpp"

using namespace urlsentry;

TEST(Svm, TwoPointsOneFeature) {
  // x0 = 0 (negative), x1 = e0 (positive), C = 1. With the bias folded into
  // w, Q = [[1, -1], [-1, 2]]; the box-constrained minimum of
  // 1/2 a'Qa - sum(a) is a = (1, 1) (gradient (-1, 0), a0 at its upper
  // bound), so w0 = 1 and b = 0.
  std::vector<std::vector<double>> rows = {std::vector<double>(16, 0.0), std::vector<double>(16, 0.0)};
  rows[1][0] = 1.0;
  const auto m = synthetic::matrix(rows, {0, 1});
  const auto svm = LinearSvm::fit(m);
  EXPECT_NEAR(svm.weights()(0), 1.0, 1e-3);
  EXPECT_NEAR(svm.bias(), 0.0, 1e-3);
  EXPECT_NEAR(svm.weights().tail(15).norm(), 0.0, 1e-12);
  EXPECT_GT(svm.decision(m.x.row(1)), svm.decision(m.x.row(0)));
}

TEST(Svm, TwoSeparatedPoints) {
  // x0 = -e0, x1 = e0: Q = [[2, 0], [0, 2]] with Q01 = -(-1 + 1) = 0, so
  // a = (1/2, 1/2), w0 = 1, b = 0 and both points lie on the margin.
  std::vector<std::vector<double>> rows = {std::vector<double>(16, 0.0), std::vector<double>(16, 0.0)};
  rows[0][0] = -1.0;
  rows[1][0] = 1.0;
  const auto m = synthetic::matrix(rows, {0, 1});
  const auto svm = LinearSvm::fit(m);
  EXPECT_NEAR(svm.decision(m.x.row(0)), -1.0, 1e-3);
  EXPECT_NEAR(svm.decision(m.x.row(1)), 1.0, 1e-3);
  EXPECT_LT(svm.score(m.x.row(0)), 0.5);
  EXPECT_GT(svm.score(m.x.row(1)), 0.5);
}

TEST(Svm, DualFeasibilityAndMonotoneObjective) {
  for (unsigned seed : {1u, 2u, 3u}) {
    const auto m = to_matrix(synthetic::table(300, seed, 0.2));
    SvmParams p;
    int sweeps_seen = 0;
    double previous = 0.0;  // objective at alpha = 0
    bool monotone = true, feasible = true;
    double worst_gap = 0;
    const auto svm = LinearSvm::fit(m, p, [&](int, const Eigen::VectorXd& alpha, double reported) {
      ++sweeps_seen;
      feasible &= alpha.minCoeff() >= 0.0 && alpha.maxCoeff() <= p.c;
      const double recomputed = oracle::svm_dual_objective(m.x, m.labels, alpha);
      worst_gap = std::max(worst_gap, std::abs(recomputed - reported) / std::max(1.0, std::abs(recomputed)));
      monotone &= recomputed <= previous + 1e-9 * std::max(1.0, std::abs(previous));
      previous = recomputed;
    });
    EXPECT_TRUE(feasible) << seed;
    EXPECT_TRUE(monotone) << seed;
    EXPECT_LT(worst_gap, 1e-9) << seed;
    EXPECT_EQ(sweeps_seen, svm.sweeps());
    EXPECT_LE(svm.sweeps(), p.max_epochs);
  }
}

TEST(Svm, SmallCBoundsAlpha) {
  const auto m = to_matrix(synthetic::table(200, 9, 0.3));
  SvmParams p;
  p.c = 0.05;
  bool feasible = true;
  LinearSvm::fit(m, p, [&](int, const Eigen::VectorXd& alpha, double) {
    feasible &= alpha.minCoeff() >= 0.0 && alpha.maxCoeff() <= p.c;
  });
  EXPECT_TRUE(feasible);
}

TEST(Svm, DeterministicGivenSeed) {
  const auto m = to_matrix(synthetic::table(200, 4));
  const auto a = LinearSvm::fit(m);
  const auto b = LinearSvm::fit(m);
  EXPECT_EQ(a.weights(), b.weights());
  EXPECT_EQ(a.bias(), b.bias());
}

TEST(Svm, MissingLabels) {
  FeatureMatrix m;
  m.x = Eigen::MatrixXd::Zero(2, 16);
  EXPECT_THROW(LinearSvm::fit(m), Error);
}

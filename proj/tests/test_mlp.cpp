#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "support/gradcheck.hpp"
#include "support/synthetic.hpp"
#include "urlsentry/error.hpp"
#include "urlsentry/models/mlp.hpp"

using namespace urlsentry;

namespace {

double gradient_error(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const std::vector<Eigen::Index>& indices) {
  return gradcheck::max_error(net, x, y, indices);
}

}  // namespace

TEST(Mlp, InitialisationShapesAndBounds) {
  Rng rng(42);
  const auto net = Mlp::initialize(16, {}, rng);
  const auto& p = net.parameters();
  ASSERT_EQ(p.weights.size(), 4u);
  const std::vector<std::pair<int, int>> shapes = {{16, 100}, {100, 100}, {100, 100}, {100, 1}};
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    EXPECT_EQ(p.weights[l].rows(), shapes[l].first);
    EXPECT_EQ(p.weights[l].cols(), shapes[l].second);
    EXPECT_EQ(p.biases[l].size(), shapes[l].second);
    const double bound = std::sqrt(6.0 / (shapes[l].first + shapes[l].second));
    EXPECT_LE(p.weights[l].cwiseAbs().maxCoeff(), bound);
    EXPECT_LE(p.biases[l].cwiseAbs().maxCoeff(), bound);
  }
  EXPECT_EQ(p.size(), 16 * 100 + 100 + 100 * 100 + 100 + 100 * 100 + 100 + 100 + 1);
}

TEST(Mlp, FlattenRoundTrip) {
  Rng rng(1);
  auto net = Mlp::initialize(16, {}, rng);
  const Eigen::VectorXd flat = net.parameters().flatten();
  Mlp::Parameters copy = net.parameters();
  copy.unflatten(flat * 2);
  EXPECT_TRUE(copy.flatten().isApprox(flat * 2));
}

TEST(Mlp, GradientMatchesFiniteDifferencesSmallNet) {
  MlpParams params;
  params.hidden = {8, 6, 5};
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int batch = 0; batch < 10; ++batch) {
    Rng rng(100 + static_cast<std::uint64_t>(batch));
    const auto net = Mlp::initialize(16, params, rng);
    Eigen::MatrixXd x(5, 16);
    Eigen::VectorXd y(5);
    for (Eigen::Index i = 0; i < 5; ++i) {
      for (Eigen::Index j = 0; j < 16; ++j) x(i, j) = u(gen) * 2;
      y(i) = gen() % 2;
    }
    std::vector<Eigen::Index> all(static_cast<std::size_t>(net.parameters().size()));
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    EXPECT_LT(gradient_error(net, x, y, all), 1e-5) << "batch " << batch;
  }
}

TEST(Mlp, GradientOnPaperSizedNet) {
  Rng rng(3);
  const auto net = Mlp::initialize(16, {}, rng);
  std::mt19937 gen(8);
  Eigen::MatrixXd x(5, 16);
  Eigen::VectorXd y(5);
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index j = 0; j < 16; ++j) x(i, j) = gen() % 2;
    x(i, 3) = gen() % 6;
    y(i) = gen() % 2;
  }
  std::vector<Eigen::Index> sample;
  for (int k = 0; k < 400; ++k) sample.push_back(static_cast<Eigen::Index>(gen() % net.parameters().size()));
  EXPECT_LT(gradient_error(net, x, y, sample), 1e-5);
}

TEST(Mlp, LearnsAnd) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int a : {0, 1}) {
    for (int b : {0, 1}) {
      std::vector<double> r(16, 0.0);
      r[0] = a;
      r[1] = b;
      rows.push_back(r);
      labels.push_back(a & b);
    }
  }
  const auto m = synthetic::matrix(rows, labels);
  const auto net = Mlp::fit(m, {}, 42);
  EXPECT_LE(net.loss_curve().size(), 200u);
  const Eigen::VectorXd p = net.predict_proba(m.x);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_EQ(p(i) >= 0.5 ? 1 : 0, labels[static_cast<std::size_t>(i)]);
}

TEST(Mlp, DeterministicForSeed) {
  const auto m = to_matrix(synthetic::table(200, 4));
  MlpParams p;
  p.hidden = {10, 10};
  p.max_epochs = 20;
  const auto a = Mlp::fit(m, p, 7);
  const auto b = Mlp::fit(m, p, 7);
  EXPECT_EQ(a.parameters().flatten(), b.parameters().flatten());
  EXPECT_EQ(a.loss_curve(), b.loss_curve());
}

TEST(Mlp, EarlyStoppingAfterPatience) {
  const auto m = to_matrix(synthetic::table(100, 4, 0.0));
  MlpParams p;
  p.hidden = {4};
  p.tol = 1e9;  // no epoch can improve by this much
  p.patience = 3;
  const auto net = Mlp::fit(m, p, 1);
  // Epoch 1 sets the best; epochs 2..5 are stale; stale count 4 > 3 stops.
  EXPECT_EQ(net.loss_curve().size(), 5u);
}

TEST(Mlp, DivergenceReportsEpoch) {
  const auto m = to_matrix(synthetic::table(50, 4));
  MlpParams p;
  p.hidden = {4};
  p.learning_rate = std::numeric_limits<double>::infinity();
  try {
    Mlp::fit(m, p, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteLoss);
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(Mlp, ScoresInUnitInterval) {
  Rng rng(9);
  auto net = Mlp::initialize(16, {}, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(3, 16, 1000.0);
  x.row(1) *= -1;
  const Eigen::VectorXd p = net.predict_proba(x);
  for (Eigen::Index i = 0; i < p.size(); ++i) EXPECT_TRUE(p(i) >= 0.0 && p(i) <= 1.0);
}

TEST(Mlp, GradientCheckNarrowsAcrossKinks) {
  // One hidden unit whose pre-activation is 1e-6 for the only row, so a
  // +-1e-5 stencil on its bias crosses the ReLU kink.
  MlpParams p;
  p.hidden = {1};
  Mlp::Parameters theta;
  theta.weights = {Eigen::MatrixXd::Zero(16, 1), Eigen::MatrixXd::Constant(1, 1, 0.7)};
  theta.biases = {Eigen::VectorXd::Constant(1, 1e-6), Eigen::VectorXd::Constant(1, -0.2)};
  const Mlp net(p, theta);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 16);
  const Eigen::VectorXd y = Eigen::VectorXd::Ones(1);
  const auto report = gradcheck::check(net, x, y, {16});  // flat index of the hidden bias
  EXPECT_GE(report.shrunk, 1);
  EXPECT_LT(report.max_error, 1e-6);
}

TEST(Mlp, ReferenceLossMatchesModel) {
  Rng rng(4);
  const auto net = Mlp::initialize(16, {}, rng);
  const auto m = to_matrix(synthetic::table(7, 2));
  const Eigen::VectorXd y = m.labels.cast<double>();
  EXPECT_NEAR(static_cast<double>(gradcheck::oracle_loss(net.parameters(), m.x, y, net.params().l2_alpha)),
              net.loss(m.x, y), 1e-12);
}

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

#include "urlsentry/feature_matrix.hpp"

namespace urlsentry {

struct SvmParams {
  double c = 1.0;
  double tol = 1e-3;
  int max_epochs = 1000;
  /// Seeds the per-sweep coordinate order.
  std::uint64_t seed = 12;

  bool operator==(const SvmParams&) const = default;
};

/// Called after every sweep with the dual coefficients and dual objective
///   D(a) = 1/2 a'Qa - sum(a),  Q_ij = y_i y_j (x_i . x_j + 1).
using SvmSweepObserver = std::function<void(int sweep, const Eigen::VectorXd& alpha, double dual_objective)>;

/// Linear soft-margin SVM with hinge loss, solved in the dual by coordinate
/// descent. The bias is handled by appending a constant 1 feature, so it is
/// regularised together with w.
class LinearSvm {
 public:
  LinearSvm() = default;
  LinearSvm(SvmParams params, Eigen::VectorXd w, double bias, int sweeps)
      : params_(params), w_(std::move(w)), bias_(bias), sweeps_(sweeps) {}

  static LinearSvm fit(const FeatureMatrix& train, const SvmParams& params = {},
                       const SvmSweepObserver& observer = {});

  template <typename Row>
  double decision(const Row& row) const {
    return row.dot(w_) + bias_;
  }

  /// Display score: sigmoid of the decision value.
  template <typename Row>
  double score(const Row& row) const {
    const double z = decision(row);
    return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }

  const SvmParams& params() const noexcept { return params_; }
  const Eigen::VectorXd& weights() const noexcept { return w_; }
  double bias() const noexcept { return bias_; }
  int sweeps() const noexcept { return sweeps_; }

 private:
  SvmParams params_;
  Eigen::VectorXd w_;
  double bias_ = 0.0;
  int sweeps_ = 0;
};

}  // namespace urlsentry

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "urlsentry/feature_matrix.hpp"
#include "urlsentry/rng.hpp"

namespace urlsentry {

struct MlpParams {
  std::vector<int> hidden{100, 100, 100};
  double l2_alpha = 0.001;
  double learning_rate = 0.001;
  int batch_size = 200;
  int max_epochs = 200;
  double tol = 1e-4;
  int patience = 10;

  bool operator==(const MlpParams&) const = default;
};

/// Fully connected ReLU network with one sigmoid output.
///
/// Loss on a batch of n rows is mean binary cross-entropy plus
/// l2_alpha/2 * sum of squared weights (biases are not penalised).
/// Training uses Adam (beta1 0.9, beta2 0.999, eps 1e-8) on shuffled
/// mini-batches and stops after max_epochs, or once the epoch loss has failed
/// to improve on the best seen by more than tol for more than `patience`
/// consecutive epochs.
class Mlp {
 public:
  /// Per-layer weight matrices (fan_in x fan_out) and bias vectors.
  struct Parameters {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    Eigen::VectorXd flatten() const;
    void unflatten(const Eigen::VectorXd& flat);
    Eigen::Index size() const;
  };

  Mlp() = default;
  Mlp(MlpParams params, Parameters parameters) : params_(std::move(params)), theta_(std::move(parameters)) {}

  /// Glorot-uniform weights and biases: U(-b, b), b = sqrt(6 / (fan_in + fan_out)).
  static Mlp initialize(Eigen::Index inputs, const MlpParams& params, Rng& rng);

  /// Throws Error{MissingLabels} or Error{NonFiniteLoss} (with the epoch).
  static Mlp fit(const FeatureMatrix& train, const MlpParams& params, std::uint64_t seed);

  /// Phishing probability for each row of x.
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const;

  template <typename Row>
  double score(const Row& row) const {
    Eigen::MatrixXd x = row;
    return predict_proba(x)(0);
  }

  double loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) const;
  /// Loss and its gradient with respect to every parameter, by backpropagation.
  double loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Parameters& grad) const;

  const MlpParams& params() const noexcept { return params_; }
  const Parameters& parameters() const noexcept { return theta_; }
  Parameters& parameters() noexcept { return theta_; }
  const std::vector<double>& loss_curve() const noexcept { return loss_curve_; }

 private:
  MlpParams params_;
  Parameters theta_;
  std::vector<double> loss_curve_;
};

}  // namespace urlsentry

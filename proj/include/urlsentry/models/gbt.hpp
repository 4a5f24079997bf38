#pragma once

#include <cmath>
#include <vector>

#include "urlsentry/feature_matrix.hpp"
#include "urlsentry/models/tree.hpp"

namespace urlsentry {

struct GbtParams {
  double learning_rate = 0.4;
  int max_depth = 7;
  int n_rounds = 100;
  double l2_lambda = 1.0;
  double min_child_weight = 1.0;

  bool operator==(const GbtParams&) const = default;
};

inline double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

/// Mean logistic loss of margins against 0/1 labels, computed stably.
double logistic_loss(const Eigen::VectorXd& margin, const Eigen::VectorXi& labels);

/// Newton-boosted regression trees on logistic loss, starting from the
/// log-odds of the training base rate.
class BoostedTrees {
 public:
  BoostedTrees() = default;
  BoostedTrees(GbtParams params, double base_margin, std::vector<Tree> trees)
      : params_(params), base_margin_(base_margin), trees_(std::move(trees)) {}

  static BoostedTrees fit(const FeatureMatrix& train, const GbtParams& params = {});

  /// Sum of the base margin and the first `rounds` trees (all when < 0).
  template <typename Row>
  double margin(const Row& row, int rounds = -1) const {
    const std::size_t n = rounds < 0 ? trees_.size() : std::min(trees_.size(), static_cast<std::size_t>(rounds));
    double m = base_margin_;
    for (std::size_t t = 0; t < n; ++t) m += trees_[t].predict(row);
    return m;
  }

  template <typename Row>
  double score(const Row& row) const {
    return sigmoid(margin(row));
  }

  /// Training loss after each round, index 0 being the base margin alone.
  const std::vector<double>& training_loss() const noexcept { return training_loss_; }

  /// Total split gain per feature.
  std::vector<double> gain_per_feature(std::size_t n_features) const;

  const GbtParams& params() const noexcept { return params_; }
  double base_margin() const noexcept { return base_margin_; }
  const std::vector<Tree>& trees() const noexcept { return trees_; }

 private:
  GbtParams params_;
  double base_margin_ = 0.0;
  std::vector<Tree> trees_;
  std::vector<double> training_loss_;
};

}  // namespace urlsentry

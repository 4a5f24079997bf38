#include <algorithm>
#include <cmath>

#include "urlsentry/error.hpp"
#include "urlsentry/models/gbt.hpp"

namespace urlsentry {

double logistic_loss(const Eigen::VectorXd& margin, const Eigen::VectorXi& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < margin.size(); ++i) {
    const double z = margin(i);
    // log(1 + e^z) - y z, without overflow
    total += std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - labels(i) * z;
  }
  return margin.size() > 0 ? total / static_cast<double>(margin.size()) : 0.0;
}

BoostedTrees BoostedTrees::fit(const FeatureMatrix& train, const GbtParams& params) {
  if (!train.has_labels()) throw Error(ErrorCode::MissingLabels, "training data has no labels");
  const Eigen::Index n = train.rows();

  const double base_rate = std::clamp(train.labels.cast<double>().mean(), 1e-6, 1.0 - 1e-6);
  BoostedTrees model;
  model.params_ = params;
  model.base_margin_ = std::log(base_rate / (1.0 - base_rate));

  NewtonTreeOptions options;
  options.max_depth = params.max_depth;
  options.l2_lambda = params.l2_lambda;
  options.min_child_weight = params.min_child_weight;
  options.learning_rate = params.learning_rate;

  Eigen::VectorXd margin = Eigen::VectorXd::Constant(n, model.base_margin_);
  Eigen::VectorXd grad(n), hess(n);
  model.training_loss_.push_back(logistic_loss(margin, train.labels));
  for (int round = 0; round < params.n_rounds; ++round) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = sigmoid(margin(i));
      grad(i) = p - train.labels(i);
      hess(i) = p * (1.0 - p);
    }
    Tree tree = grow_newton_tree(train.x, grad, hess, options);
    for (Eigen::Index i = 0; i < n; ++i) margin(i) += tree.predict(train.x.row(i));
    model.trees_.push_back(std::move(tree));
    model.training_loss_.push_back(logistic_loss(margin, train.labels));
  }
  return model;
}

std::vector<double> BoostedTrees::gain_per_feature(std::size_t n_features) const {
  std::vector<double> gains(n_features, 0.0);
  for (const auto& t : trees_) t.accumulate_gain(gains);
  return gains;
}

}  // namespace urlsentry

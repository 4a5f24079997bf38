#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "urlsentry/rng.hpp"

namespace urlsentry {

/// Flat binary tree node. A node with feature < 0 is a leaf.
///   split: go left when x[feature] <= threshold.
///   leaf:  value is the prediction (phishing fraction for classification
///          trees, the scaled Newton step for boosted trees).
/// weight is the (weighted) sample count for Gini trees and the hessian sum
/// for boosted trees; gain is the impurity decrease / split gain credited to
/// the split feature.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  double weight = 0.0;
  double gain = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  template <typename Row>
  const TreeNode& leaf_for(const Row& row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(row(n.feature) <= n.threshold ? n.left : n.right);
    }
    return nodes[i];
  }

  template <typename Row>
  double predict(const Row& row) const {
    return leaf_for(row).value;
  }

  int depth() const;
  /// Adds each split's gain to importance[feature].
  void accumulate_gain(std::span<double> importance) const;

  bool operator==(const Tree&) const = default;
};

struct GiniTreeOptions {
  int max_depth = 5;
  /// Non-constant features to inspect per split; 0 inspects all of them.
  std::size_t max_features = 0;
};

/// Greedy CART on Gini impurity. Candidate thresholds are midpoints between
/// consecutive distinct values of a feature within the node. The split with
/// the lowest weighted child impurity wins; ties go to the lowest feature
/// index, then the lowest threshold. Growth stops at max_depth, at a pure
/// node, when the node weight is below 2, or when no candidate exists.
/// `weights` holds a non-negative multiplicity per row (bootstrap counts).
/// `rng` is needed only when max_features restricts the search.
Tree grow_gini_tree(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, std::span<const double> weights,
                    const GiniTreeOptions& options, Rng* rng = nullptr);

struct NewtonTreeOptions {
  int max_depth = 7;
  double l2_lambda = 1.0;
  double min_child_weight = 1.0;
  double learning_rate = 0.4;
};

/// Regression tree fitted to first/second-order loss statistics. Split gain
///   1/2 [GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)]
/// must be positive and each child needs hessian >= min_child_weight. Leaf
/// values are -G/(H+l) scaled by learning_rate.
Tree grow_newton_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& grad, const Eigen::VectorXd& hess,
                      const NewtonTreeOptions& options);

}  // namespace urlsentry

#pragma once

#include <cstdint>
#include <vector>

#include "urlsentry/feature_matrix.hpp"
#include "urlsentry/models/tree.hpp"

namespace urlsentry {

struct DecisionTreeParams {
  int max_depth = 5;

  bool operator==(const DecisionTreeParams&) const = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(DecisionTreeParams params, Tree tree) : params_(params), tree_(std::move(tree)) {}

  /// Throws Error{MissingLabels}.
  static DecisionTree fit(const FeatureMatrix& train, const DecisionTreeParams& params = {});

  template <typename Row>
  double score(const Row& row) const {
    return tree_.predict(row);
  }

  /// Raw (unnormalised) impurity decrease per feature.
  std::vector<double> gain_per_feature(std::size_t n_features) const;

  const DecisionTreeParams& params() const noexcept { return params_; }
  const Tree& tree() const noexcept { return tree_; }

 private:
  DecisionTreeParams params_;
  Tree tree_;
};

struct RandomForestParams {
  int max_depth = 5;
  int n_trees = 100;
  int feature_subsample = 4;  // ceil(sqrt(16))
  bool bootstrap = true;

  bool operator==(const RandomForestParams&) const = default;
};

/// Bagged Gini trees. The score is the fraction of trees whose leaf votes
/// phishing (leaf fraction >= 0.5).
class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(RandomForestParams params, std::vector<Tree> trees)
      : params_(params), trees_(std::move(trees)) {}

  /// Trees are grown in parallel; each draws from its own stream derived
  /// from `seed`, so the result does not depend on `workers`.
  static RandomForest fit(const FeatureMatrix& train, const RandomForestParams& params, std::uint64_t seed,
                          unsigned workers = 0);

  template <typename Row>
  double score(const Row& row) const {
    if (trees_.empty()) return 0.0;
    int votes = 0;
    for (const auto& t : trees_) votes += t.predict(row) >= 0.5;
    return static_cast<double>(votes) / static_cast<double>(trees_.size());
  }

  /// Per-tree impurity decrease, averaged over trees.
  std::vector<double> gain_per_feature(std::size_t n_features) const;

  const RandomForestParams& params() const noexcept { return params_; }
  const std::vector<Tree>& trees() const noexcept { return trees_; }

 private:
  RandomForestParams params_;
  std::vector<Tree> trees_;
};

}  // namespace urlsentry

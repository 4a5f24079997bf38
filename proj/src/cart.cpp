#include <algorithm>
#include <thread>

#include "urlsentry/error.hpp"
#include "urlsentry/models/cart.hpp"

namespace urlsentry {

namespace {

void require_labels(const FeatureMatrix& train) {
  if (!train.has_labels()) throw Error(ErrorCode::MissingLabels, "training data has no labels");
}

}  // namespace

DecisionTree DecisionTree::fit(const FeatureMatrix& train, const DecisionTreeParams& params) {
  require_labels(train);
  const std::vector<double> weights(static_cast<std::size_t>(train.rows()), 1.0);
  GiniTreeOptions options;
  options.max_depth = params.max_depth;
  return DecisionTree(params, grow_gini_tree(train.x, train.labels, weights, options));
}

std::vector<double> DecisionTree::gain_per_feature(std::size_t n_features) const {
  std::vector<double> gains(n_features, 0.0);
  tree_.accumulate_gain(gains);
  return gains;
}

RandomForest RandomForest::fit(const FeatureMatrix& train, const RandomForestParams& params, std::uint64_t seed,
                               unsigned workers) {
  require_labels(train);
  const auto n = static_cast<std::size_t>(train.rows());
  const auto n_trees = static_cast<std::size_t>(std::max(params.n_trees, 0));

  // Streams are forked up front so the tree -> stream mapping is fixed.
  Rng root(seed);
  std::vector<Rng> streams;
  streams.reserve(n_trees);
  for (std::size_t t = 0; t < n_trees; ++t) streams.push_back(root.fork(t));

  GiniTreeOptions options;
  options.max_depth = params.max_depth;
  options.max_features = static_cast<std::size_t>(std::max(params.feature_subsample, 0));

  std::vector<Tree> trees(n_trees);
  auto grow_one = [&](std::size_t t) {
    Rng& rng = streams[t];
    std::vector<double> weights(n, params.bootstrap ? 0.0 : 1.0);
    if (params.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) weights[rng.below(n)] += 1.0;
    }
    trees[t] = grow_gini_tree(train.x, train.labels, weights, options, &rng);
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n_trees, 1)));
  if (workers <= 1) {
    for (std::size_t t = 0; t < n_trees; ++t) grow_one(t);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < n_trees; t += workers) grow_one(t);
      });
    }
    for (auto& th : pool) th.join();
  }
  return RandomForest(params, std::move(trees));
}

std::vector<double> RandomForest::gain_per_feature(std::size_t n_features) const {
  std::vector<double> gains(n_features, 0.0);
  for (const auto& t : trees_) t.accumulate_gain(gains);
  if (!trees_.empty()) {
    for (double& g : gains) g /= static_cast<double>(trees_.size());
  }
  return gains;
}

}  // namespace urlsentry

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

#include "urlsentry/models/tree.hpp"

namespace urlsentry {

int Tree::depth() const {
  if (nodes.empty()) return 0;
  std::function<int(int)> walk = [&](int i) -> int {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) return 0;
    return 1 + std::max(walk(n.left), walk(n.right));
  };
  return walk(0);
}

void Tree::accumulate_gain(std::span<double> importance) const {
  for (const auto& n : nodes) {
    if (!n.is_leaf()) importance[static_cast<std::size_t>(n.feature)] += n.gain;
  }
}

namespace {

constexpr double kTieEpsilon = 1e-12;

struct Candidate {
  int feature = -1;
  double threshold = 0.0;
  double score = std::numeric_limits<double>::infinity();  // lower is better

  /// Lexicographic (score, feature, threshold) with a tolerance on score.
  bool better_than(const Candidate& other) const {
    if (other.feature < 0) return true;
    if (score < other.score - kTieEpsilon) return true;
    if (score > other.score + kTieEpsilon) return false;
    if (feature != other.feature) return feature < other.feature;
    return threshold < other.threshold;
  }
};

double gini(double w0, double w1) {
  const double w = w0 + w1;
  if (w <= 0) return 0.0;
  const double p0 = w0 / w, p1 = w1 / w;
  return 1.0 - (p0 * p0 + p1 * p1);
}

class GiniGrower {
 public:
  GiniGrower(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, std::span<const double> w,
             const GiniTreeOptions& options, Rng* rng)
      : x_(x), y_(y), w_(w), options_(options), rng_(rng) {}

  Tree grow() {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < x_.rows(); ++i) {
      if (w_[static_cast<std::size_t>(i)] > 0) rows.push_back(i);
    }
    build(rows, 0);
    return std::move(tree_);
  }

 private:
  struct Counts {
    double w0 = 0, w1 = 0;
  };

  int build(const std::vector<Eigen::Index>& rows, int depth) {
    Counts total;
    for (auto i : rows) (y_(i) == 1 ? total.w1 : total.w0) += w_[static_cast<std::size_t>(i)];
    const double weight = total.w0 + total.w1;
    const double impurity = gini(total.w0, total.w1);

    const int id = static_cast<int>(tree_.nodes.size());
    TreeNode node;
    node.value = weight > 0 ? total.w1 / weight : 0.0;
    node.weight = weight;
    tree_.nodes.push_back(node);

    if (depth >= options_.max_depth || total.w0 == 0 || total.w1 == 0 || weight < 2) return id;
    const Candidate best = find_split(rows, weight);
    if (best.feature < 0) return id;

    std::vector<Eigen::Index> left, right;
    for (auto i : rows) (x_(i, best.feature) <= best.threshold ? left : right).push_back(i);

    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    auto& n = tree_.nodes[static_cast<std::size_t>(id)];
    n.feature = best.feature;
    n.threshold = best.threshold;
    n.left = l;
    n.right = r;
    n.gain = weight * impurity - weight * best.score;
    return id;
  }

  Candidate find_split(const std::vector<Eigen::Index>& rows, double weight) {
    const auto n_features = static_cast<std::size_t>(x_.cols());
    std::vector<std::size_t> order(n_features);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const bool subsample = options_.max_features > 0 && options_.max_features < n_features;
    if (subsample && rng_) rng_->shuffle(std::span<std::size_t>(order));

    Candidate best;
    std::size_t inspected = 0;
    for (std::size_t f : order) {
      if (subsample && inspected >= options_.max_features) break;
      std::map<double, Counts> buckets;
      for (auto i : rows) {
        auto& c = buckets[x_(i, static_cast<Eigen::Index>(f))];
        (y_(i) == 1 ? c.w1 : c.w0) += w_[static_cast<std::size_t>(i)];
      }
      if (buckets.size() < 2) continue;  // constant here; does not count as inspected
      ++inspected;

      Counts all;
      for (const auto& [v, c] : buckets) {
        all.w0 += c.w0;
        all.w1 += c.w1;
      }
      Counts left;
      for (auto it = buckets.begin(); std::next(it) != buckets.end(); ++it) {
        left.w0 += it->second.w0;
        left.w1 += it->second.w1;
        const double wl = left.w0 + left.w1;
        const double wr = weight - wl;
        Candidate c;
        c.feature = static_cast<int>(f);
        c.threshold = (it->first + std::next(it)->first) / 2.0;
        c.score = (wl * gini(left.w0, left.w1) + wr * gini(all.w0 - left.w0, all.w1 - left.w1)) / weight;
        if (c.better_than(best)) best = c;
      }
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXi& y_;
  std::span<const double> w_;
  GiniTreeOptions options_;
  Rng* rng_;
  Tree tree_;
};

class NewtonGrower {
 public:
  NewtonGrower(const Eigen::MatrixXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& h,
               const NewtonTreeOptions& options)
      : x_(x), g_(g), h_(h), options_(options) {}

  Tree grow() {
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(x_.rows()));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    build(rows, 0);
    return std::move(tree_);
  }

 private:
  struct Stats {
    double g = 0, h = 0;
  };

  double term(const Stats& s) const { return s.g * s.g / (s.h + options_.l2_lambda); }

  int build(const std::vector<Eigen::Index>& rows, int depth) {
    Stats total;
    for (auto i : rows) {
      total.g += g_(i);
      total.h += h_(i);
    }
    const int id = static_cast<int>(tree_.nodes.size());
    TreeNode node;
    node.value = -total.g / (total.h + options_.l2_lambda) * options_.learning_rate;
    node.weight = total.h;
    tree_.nodes.push_back(node);

    if (depth >= options_.max_depth || rows.size() < 2) return id;
    const Candidate best = find_split(rows, total);
    if (best.feature < 0) return id;

    std::vector<Eigen::Index> left, right;
    for (auto i : rows) (x_(i, best.feature) <= best.threshold ? left : right).push_back(i);
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    auto& n = tree_.nodes[static_cast<std::size_t>(id)];
    n.feature = best.feature;
    n.threshold = best.threshold;
    n.left = l;
    n.right = r;
    n.gain = -best.score;
    return id;
  }

  Candidate find_split(const std::vector<Eigen::Index>& rows, const Stats& total) const {
    Candidate best;
    const double parent = term(total);
    for (Eigen::Index f = 0; f < x_.cols(); ++f) {
      std::map<double, Stats> buckets;
      for (auto i : rows) {
        auto& s = buckets[x_(i, f)];
        s.g += g_(i);
        s.h += h_(i);
      }
      if (buckets.size() < 2) continue;
      Stats left;
      for (auto it = buckets.begin(); std::next(it) != buckets.end(); ++it) {
        left.g += it->second.g;
        left.h += it->second.h;
        const Stats right{total.g - left.g, total.h - left.h};
        if (left.h < options_.min_child_weight || right.h < options_.min_child_weight) continue;
        const double gain = 0.5 * (term(left) + term(right) - parent);
        if (!(gain > kTieEpsilon)) continue;
        Candidate c;
        c.feature = static_cast<int>(f);
        c.threshold = (it->first + std::next(it)->first) / 2.0;
        c.score = -gain;
        if (c.better_than(best)) best = c;
      }
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& g_;
  const Eigen::VectorXd& h_;
  NewtonTreeOptions options_;
  Tree tree_;
};

}  // namespace

Tree grow_gini_tree(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, std::span<const double> weights,
                    const GiniTreeOptions& options, Rng* rng) {
  return GiniGrower(x, y, weights, options, rng).grow();
}

Tree grow_newton_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& grad, const Eigen::VectorXd& hess,
                      const NewtonTreeOptions& options) {
  return NewtonGrower(x, grad, hess, options).grow();
}

}  // namespace urlsentry

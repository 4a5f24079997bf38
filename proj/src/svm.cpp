#include <algorithm>
#include <cmath>

#include "urlsentry/error.hpp"
#include "urlsentry/models/svm.hpp"
#include "urlsentry/rng.hpp"

namespace urlsentry {

LinearSvm LinearSvm::fit(const FeatureMatrix& train, const SvmParams& params, const SvmSweepObserver& observer) {
  if (!train.has_labels()) throw Error(ErrorCode::MissingLabels, "training data has no labels");
  const Eigen::Index n = train.rows();
  const Eigen::Index d = train.x.cols();

  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = train.labels(i) == 1 ? 1.0 : -1.0;
  // Diagonal of Q with the implicit bias feature.
  const Eigen::VectorXd qd = train.x.rowwise().squaredNorm().array() + 1.0;

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  Rng rng(params.seed);
  const double c = params.c;

  int sweep = 0;
  while (sweep < params.max_epochs) {
    ++sweep;
    double max_violation = 0.0;
    for (std::size_t k : rng.permutation(static_cast<std::size_t>(n))) {
      const auto i = static_cast<Eigen::Index>(k);
      const double g = y(i) * (train.x.row(i).dot(w) + b) - 1.0;
      double pg = g;
      if (alpha(i) <= 0.0) pg = std::min(g, 0.0);
      else if (alpha(i) >= c) pg = std::max(g, 0.0);
      max_violation = std::max(max_violation, std::abs(pg));
      if (pg == 0.0) continue;

      const double old = alpha(i);
      alpha(i) = std::clamp(old - g / qd(i), 0.0, c);
      const double step = (alpha(i) - old) * y(i);
      w += step * train.x.row(i).transpose();
      b += step;
    }
    if (observer) observer(sweep, alpha, 0.5 * (w.squaredNorm() + b * b) - alpha.sum());
    if (max_violation < params.tol) break;
  }
  return LinearSvm(params, std::move(w), b, sweep);
}

}  // namespace urlsentry

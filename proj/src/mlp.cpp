#include <limits>
#include <cmath>
#include <string>

#include "urlsentry/error.hpp"
#include "urlsentry/models/mlp.hpp"

namespace urlsentry {

Eigen::Index Mlp::Parameters::size() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

Eigen::VectorXd Mlp::Parameters::flatten() const {
  Eigen::VectorXd flat(size());
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.segment(at, weights[l].size()) = weights[l].reshaped();
    at += weights[l].size();
    flat.segment(at, biases[l].size()) = biases[l];
    at += biases[l].size();
  }
  return flat;
}

void Mlp::Parameters::unflatten(const Eigen::VectorXd& flat) {
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l].reshaped() = flat.segment(at, weights[l].size());
    at += weights[l].size();
    biases[l] = flat.segment(at, biases[l].size());
    at += biases[l].size();
  }
}

Mlp Mlp::initialize(Eigen::Index inputs, const MlpParams& params, Rng& rng) {
  Parameters theta;
  Eigen::Index fan_in = inputs;
  std::vector<int> widths = params.hidden;
  widths.push_back(1);
  for (int width : widths) {
    const Eigen::Index fan_out = width;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Eigen::MatrixXd w(fan_in, fan_out);
    Eigen::VectorXd b(fan_out);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
    }
    for (Eigen::Index j = 0; j < b.size(); ++j) b(j) = rng.uniform(-bound, bound);
    theta.weights.push_back(std::move(w));
    theta.biases.push_back(std::move(b));
    fan_in = fan_out;
  }
  return Mlp(params, std::move(theta));
}

namespace {

double weight_penalty(const Mlp::Parameters& theta) {
  double sq = 0.0;
  for (const auto& w : theta.weights) sq += w.squaredNorm();
  return sq;
}

/// Mean cross-entropy of output logits z against labels y.
double cross_entropy(const Eigen::VectorXd& z, const Eigen::VectorXd& y) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    total += std::max(z(i), 0.0) + std::log1p(std::exp(-std::abs(z(i)))) - y(i) * z(i);
  }
  return total / static_cast<double>(z.size());
}

double stable_sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

Eigen::VectorXd Mlp::predict_proba(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd a = x;
  const std::size_t layers = theta_.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = a * theta_.weights[l];
    z.rowwise() += theta_.biases[l].transpose();
    if (l + 1 < layers) a = z.cwiseMax(0.0);
    else a = std::move(z);
  }
  return a.col(0).unaryExpr(&stable_sigmoid);
}

double Mlp::loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) const {
  Eigen::MatrixXd a = x;
  const std::size_t layers = theta_.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = a * theta_.weights[l];
    z.rowwise() += theta_.biases[l].transpose();
    a = l + 1 < layers ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return cross_entropy(a.col(0), y) + 0.5 * params_.l2_alpha * weight_penalty(theta_);
}

double Mlp::loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Parameters& grad) const {
  const std::size_t layers = theta_.weights.size();
  const auto n = static_cast<double>(x.rows());

  // activations[l] is the input to layer l; pre[l] its pre-activation output.
  std::vector<Eigen::MatrixXd> activations(layers + 1), pre(layers);
  activations[0] = x;
  for (std::size_t l = 0; l < layers; ++l) {
    pre[l] = activations[l] * theta_.weights[l];
    pre[l].rowwise() += theta_.biases[l].transpose();
    activations[l + 1] = l + 1 < layers ? Eigen::MatrixXd(pre[l].cwiseMax(0.0)) : pre[l];
  }
  const Eigen::VectorXd logits = pre.back().col(0);
  const double value = cross_entropy(logits, y) + 0.5 * params_.l2_alpha * weight_penalty(theta_);

  grad.weights.resize(layers);
  grad.biases.resize(layers);
  Eigen::MatrixXd delta = (logits.unaryExpr(&stable_sigmoid) - y) / n;
  for (std::size_t l = layers; l-- > 0;) {
    grad.weights[l] = activations[l].transpose() * delta + params_.l2_alpha * theta_.weights[l];
    grad.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd back = delta * theta_.weights[l].transpose();
      delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return value;
}

Mlp Mlp::fit(const FeatureMatrix& train, const MlpParams& params, std::uint64_t seed) {
  if (!train.has_labels()) throw Error(ErrorCode::MissingLabels, "training data has no labels");
  Rng rng(seed);
  Mlp model = initialize(train.x.cols(), params, rng);

  const Eigen::Index n = train.rows();
  const Eigen::Index batch = std::min<Eigen::Index>(std::max(params.batch_size, 1), n);
  const Eigen::VectorXd y = train.labels.cast<double>();

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Eigen::VectorXd theta = model.theta_.flatten();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
  long step = 0;

  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  Parameters grad;
  for (int epoch = 1; epoch <= params.max_epochs; ++epoch) {
    const std::vector<std::size_t> order = rng.permutation(static_cast<std::size_t>(n));
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index count = std::min(batch, n - start);
      Eigen::MatrixXd xb(count, train.x.cols());
      Eigen::VectorXd yb(count);
      for (Eigen::Index i = 0; i < count; ++i) {
        const auto r = static_cast<Eigen::Index>(order[static_cast<std::size_t>(start + i)]);
        xb.row(i) = train.x.row(r);
        yb(i) = y(r);
      }
      const double batch_loss = model.loss_and_gradient(xb, yb, grad);
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorCode::NonFiniteLoss, "mlp loss diverged in epoch " + std::to_string(epoch));
      }
      epoch_loss += batch_loss * static_cast<double>(count);

      ++step;
      const Eigen::VectorXd g = grad.flatten();
      m = beta1 * m + (1.0 - beta1) * g;
      v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
      const double lr = params.learning_rate * std::sqrt(1.0 - std::pow(beta2, static_cast<double>(step))) /
                        (1.0 - std::pow(beta1, static_cast<double>(step)));
      theta.array() -= lr * m.array() / (v.array().sqrt() + eps);
      model.theta_.unflatten(theta);
    }
    epoch_loss /= static_cast<double>(n);
    model.loss_curve_.push_back(epoch_loss);

    if (epoch_loss > best - params.tol) ++stale;
    else stale = 0;
    best = std::min(best, epoch_loss);
    if (stale > params.patience) break;
  }
  return model;
}

}  // namespace urlsentry

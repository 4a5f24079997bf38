#include "urlsentry/models/model.hpp"

#include <algorithm>
#include <numeric>

#include "urlsentry/error.hpp"

namespace urlsentry {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::DecisionTree: return "decision_tree";
    case ModelKind::RandomForest: return "random_forest";
    case ModelKind::Gbt: return "gbt";
    case ModelKind::Mlp: return "mlp";
    case ModelKind::LinearSvm: return "linear_svm";
  }
  return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view text) noexcept {
  if (text == "decision_tree" || text == "tree") return ModelKind::DecisionTree;
  if (text == "random_forest" || text == "forest") return ModelKind::RandomForest;
  if (text == "gbt") return ModelKind::Gbt;
  if (text == "mlp") return ModelKind::Mlp;
  if (text == "linear_svm" || text == "svm") return ModelKind::LinearSvm;
  return std::nullopt;
}

std::string_view display_name(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::DecisionTree: return "Decision Tree";
    case ModelKind::RandomForest: return "Random Forest";
    case ModelKind::Gbt: return "XGBoost";
    case ModelKind::Mlp: return "Multilayer Perceptrons";
    case ModelKind::LinearSvm: return "SVM";
  }
  return "unknown";
}

ModelKind TrainedModel::kind() const noexcept {
  return std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DecisionTree>) return ModelKind::DecisionTree;
        else if constexpr (std::is_same_v<T, RandomForest>) return ModelKind::RandomForest;
        else if constexpr (std::is_same_v<T, BoostedTrees>) return ModelKind::Gbt;
        else if constexpr (std::is_same_v<T, Mlp>) return ModelKind::Mlp;
        else return ModelKind::LinearSvm;
      },
      impl);
}

Hyperparams TrainedModel::config() const {
  return std::visit([](const auto& m) -> Hyperparams { return m.params(); }, impl);
}

Hyperparams default_hyperparams(ModelKind kind) {
  switch (kind) {
    case ModelKind::DecisionTree: return DecisionTreeParams{};
    case ModelKind::RandomForest: return RandomForestParams{};
    case ModelKind::Gbt: return GbtParams{};
    case ModelKind::Mlp: return MlpParams{};
    case ModelKind::LinearSvm: return SvmParams{};
  }
  return DecisionTreeParams{};
}

TrainedModel train_decision_tree(const FeatureMatrix& train, const DecisionTreeParams& hp) {
  return {DecisionTree::fit(train, hp)};
}

TrainedModel train_random_forest(const FeatureMatrix& train, const RandomForestParams& hp, std::uint64_t seed) {
  return {RandomForest::fit(train, hp, seed)};
}

TrainedModel train_gbt(const FeatureMatrix& train, const GbtParams& hp) { return {BoostedTrees::fit(train, hp)}; }

TrainedModel train_mlp(const FeatureMatrix& train, const MlpParams& hp, std::uint64_t seed) {
  return {Mlp::fit(train, hp, seed)};
}

TrainedModel train_svm(const FeatureMatrix& train, const SvmParams& hp) { return {LinearSvm::fit(train, hp)}; }

TrainedModel train_model(const FeatureMatrix& train, const Hyperparams& hp, std::uint64_t seed) {
  return std::visit(
      [&](const auto& p) -> TrainedModel {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, DecisionTreeParams>) return train_decision_tree(train, p);
        else if constexpr (std::is_same_v<P, RandomForestParams>) return train_random_forest(train, p, seed);
        else if constexpr (std::is_same_v<P, GbtParams>) return train_gbt(train, p);
        else if constexpr (std::is_same_v<P, MlpParams>) return train_mlp(train, p, seed);
        else return train_svm(train, p);
      },
      hp);
}

Eigen::VectorXd score_rows(const TrainedModel& model, const Eigen::MatrixXd& x) {
  if (const auto* mlp = std::get_if<Mlp>(&model.impl)) return mlp->predict_proba(x);
  Eigen::VectorXd scores(x.rows());
  std::visit(
      [&](const auto& m) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) scores(i) = m.score(x.row(i));
      },
      model.impl);
  return scores;
}

Verdict predict(const TrainedModel& model, const FeatureVector& features) {
  if (model.schema_version != kSchemaVersion) {
    throw Error(ErrorCode::SchemaMismatch, "model schema '" + model.schema_version + "' does not match '" +
                                               std::string(kSchemaVersion) + "'");
  }
  Eigen::MatrixXd row = to_row(features);
  const double score = score_rows(model, row)(0);
  return {label_for(score), score};
}

std::vector<std::pair<std::string, double>> feature_importance(const TrainedModel& model) {
  std::vector<double> gains;
  if (const auto* t = std::get_if<DecisionTree>(&model.impl)) gains = t->gain_per_feature(kFeatureCount);
  else if (const auto* f = std::get_if<RandomForest>(&model.impl)) gains = f->gain_per_feature(kFeatureCount);
  else if (const auto* g = std::get_if<BoostedTrees>(&model.impl)) gains = g->gain_per_feature(kFeatureCount);
  else {
    throw Error(ErrorCode::UnsupportedKind,
                "feature importance is not defined for " + std::string(to_string(model.kind())));
  }
  const double total = std::accumulate(gains.begin(), gains.end(), 0.0);
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    out.emplace_back(std::string(kFeatureNames[j]), total > 0 ? gains[j] / total : 0.0);
  }
  return out;
}

}  // namespace urlsentry

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "urlsentry/dataset.hpp"
#include "urlsentry/models/cart.hpp"
#include "urlsentry/models/gbt.hpp"
#include "urlsentry/models/mlp.hpp"
#include "urlsentry/models/svm.hpp"

namespace urlsentry {

enum class ModelKind { DecisionTree, RandomForest, Gbt, Mlp, LinearSvm };

inline constexpr std::array<ModelKind, 5> kAllModelKinds = {
    ModelKind::DecisionTree, ModelKind::RandomForest, ModelKind::Mlp, ModelKind::Gbt, ModelKind::LinearSvm};

/// Persisted identifier: decision_tree, random_forest, gbt, mlp, linear_svm.
std::string_view to_string(ModelKind kind) noexcept;
/// Accepts persisted identifiers and the short CLI names (tree, forest, gbt, mlp, svm).
std::optional<ModelKind> parse_model_kind(std::string_view text) noexcept;
/// Row label in comparison tables.
std::string_view display_name(ModelKind kind) noexcept;

using ModelImpl = std::variant<DecisionTree, RandomForest, BoostedTrees, Mlp, LinearSvm>;
using Hyperparams = std::variant<DecisionTreeParams, RandomForestParams, GbtParams, MlpParams, SvmParams>;

struct TrainedModel {
  ModelImpl impl;
  std::string trained_at;  // ISO-8601 UTC
  std::string schema_version{kSchemaVersion};

  ModelKind kind() const noexcept;
  Hyperparams config() const;
};

Hyperparams default_hyperparams(ModelKind kind);

TrainedModel train_decision_tree(const FeatureMatrix& train, const DecisionTreeParams& hp = {});
TrainedModel train_random_forest(const FeatureMatrix& train, const RandomForestParams& hp = {},
                                 std::uint64_t seed = 42);
TrainedModel train_gbt(const FeatureMatrix& train, const GbtParams& hp = {});
TrainedModel train_mlp(const FeatureMatrix& train, const MlpParams& hp = {}, std::uint64_t seed = 42);
TrainedModel train_svm(const FeatureMatrix& train, const SvmParams& hp = {});

/// Dispatches on the hyperparameter alternative.
TrainedModel train_model(const FeatureMatrix& train, const Hyperparams& hp, std::uint64_t seed);

struct Verdict {
  int label = 0;
  double score = 0.0;
};

/// Label is phishing when score >= this.
inline constexpr double kPhishingThreshold = 0.5;

inline int label_for(double score) noexcept { return score >= kPhishingThreshold ? 1 : 0; }

/// Throws Error{SchemaMismatch} when the model was trained on another layout.
Verdict predict(const TrainedModel& model, const FeatureVector& features);

/// Scores without the schema check, one per row.
Eigen::VectorXd score_rows(const TrainedModel& model, const Eigen::MatrixXd& x);

/// Impurity decrease (gain for boosted trees) per feature, normalised to sum
/// to 1; all zeros if the model never split. Throws Error{UnsupportedKind}
/// for mlp and linear_svm.
std::vector<std::pair<std::string, double>> feature_importance(const TrainedModel& model);

}  // namespace urlsentry

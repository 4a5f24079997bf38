#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "urlsentry/dataset.hpp"
#include "urlsentry/models/model.hpp"

namespace urlsentry {

enum class SplitKind { Train, Test };

std::string_view to_string(SplitKind split) noexcept;

/// Confusion counts with phishing (label 1) as the positive class.
struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  bool operator==(const Confusion&) const = default;
};

struct Metrics {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
};

/// Ratios are 0 when their denominator is 0.
Metrics metrics_from(const Confusion& c) noexcept;

Confusion confusion_of(const Eigen::VectorXi& labels, const Eigen::VectorXi& predicted);

struct EvalReport {
  ModelKind model_kind = ModelKind::DecisionTree;
  SplitKind split = SplitKind::Test;
  Confusion confusion;
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
};

/// Throws Error{MissingLabels}, or Error{SchemaMismatch} if the model or the
/// matrix columns do not follow the current feature layout.
EvalReport evaluate_model(const TrainedModel& model, const FeatureMatrix& data, SplitKind split);

struct ComparisonRow {
  std::string model_name;
  double train_accuracy = 0, test_accuracy = 0;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  std::vector<EvalReport> reports;  // train then test, per model in row order
  Split split;
};

/// Trains every kind with default hyperparameters on one shared split and
/// evaluates it on both halves. Rows follow the order of `kinds`. Training
/// errors are rethrown with the model kind prefixed to the message.
Comparison compare_models(const FeatureTable& table, const SplitSpec& spec,
                          const std::vector<ModelKind>& kinds = {kAllModelKinds.begin(), kAllModelKinds.end()},
                          std::uint64_t seed = 42);

/// `ML Model,Train Accuracy,Test Accuracy` with three decimals.
void write_comparison_csv(const Comparison& comparison, std::ostream& out);
/// The same three columns, padded for a terminal.
void write_comparison_text(const Comparison& comparison, std::ostream& out);
/// One line per report: kind, split, counts and the four metrics.
void write_reports_text(const std::vector<EvalReport>& reports, std::ostream& out);

std::string format_fixed3(double v);

}  // namespace urlsentry

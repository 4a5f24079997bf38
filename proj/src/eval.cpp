#include "urlsentry/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "urlsentry/error.hpp"

namespace urlsentry {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::string_view to_string(SplitKind split) noexcept { return split == SplitKind::Train ? "train" : "test"; }

Metrics metrics_from(const Confusion& c) noexcept {
  Metrics m;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f1 = m.precision + m.recall == 0 ? 0.0 : 2 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

Confusion confusion_of(const Eigen::VectorXi& labels, const Eigen::VectorXi& predicted) {
  Confusion c;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const bool actual = labels(i) == 1;
    const bool said = predicted(i) == 1;
    if (actual && said) ++c.tp;
    else if (!actual && said) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

EvalReport evaluate_model(const TrainedModel& model, const FeatureMatrix& data, SplitKind split) {
  if (!data.has_labels()) throw Error(ErrorCode::MissingLabels, "evaluation data has no labels");
  if (model.schema_version != kSchemaVersion) {
    throw Error(ErrorCode::SchemaMismatch, "model schema " + model.schema_version + " differs from " +
                                               std::string(kSchemaVersion));
  }
  if (data.x.cols() != static_cast<Eigen::Index>(kFeatureCount) ||
      (!data.features.empty() && data.features != default_feature_names())) {
    throw Error(ErrorCode::SchemaMismatch, "evaluation matrix columns do not match the feature layout");
  }

  const Eigen::VectorXd scores = score_rows(model, data.x);
  Eigen::VectorXi predicted(scores.size());
  for (Eigen::Index i = 0; i < scores.size(); ++i) predicted(i) = label_for(scores(i));

  EvalReport r;
  r.model_kind = model.kind();
  r.split = split;
  r.confusion = confusion_of(data.labels, predicted);
  const auto m = metrics_from(r.confusion);
  r.accuracy = m.accuracy;
  r.precision = m.precision;
  r.recall = m.recall;
  r.f1 = m.f1;
  return r;
}

Comparison compare_models(const FeatureTable& table, const SplitSpec& spec, const std::vector<ModelKind>& kinds,
                          std::uint64_t seed) {
  Comparison out;
  out.split = preprocess(table, spec);
  for (ModelKind kind : kinds) {
    TrainedModel model;
    try {
      model = train_model(out.split.train, default_hyperparams(kind), seed);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(to_string(kind)) + ": " + e.what());
    }
    auto train = evaluate_model(model, out.split.train, SplitKind::Train);
    auto test = evaluate_model(model, out.split.test, SplitKind::Test);
    out.rows.push_back({std::string(display_name(kind)), train.accuracy, test.accuracy});
    out.reports.push_back(train);
    out.reports.push_back(test);
  }
  return out;
}

std::string format_fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

void write_comparison_csv(const Comparison& comparison, std::ostream& out) {
  out << "ML Model,Train Accuracy,Test Accuracy\n";
  for (const auto& row : comparison.rows) {
    out << row.model_name << ',' << format_fixed3(row.train_accuracy) << ',' << format_fixed3(row.test_accuracy)
        << '\n';
  }
}

void write_comparison_text(const Comparison& comparison, std::ostream& out) {
  std::size_t width = std::string_view("ML Model").size();
  for (const auto& row : comparison.rows) width = std::max(width, row.model_name.size());
  auto pad = [&](std::string s) {
    s.resize(width, ' ');
    return s;
  };
  out << pad("ML Model") << "  Train Accuracy  Test Accuracy\n";
  for (const auto& row : comparison.rows) {
    out << pad(row.model_name) << "  " << format_fixed3(row.train_accuracy) << "           "
        << format_fixed3(row.test_accuracy) << '\n';
  }
}

void write_reports_text(const std::vector<EvalReport>& reports, std::ostream& out) {
  for (const auto& r : reports) {
    const auto& c = r.confusion;
    out << to_string(r.model_kind) << ' ' << to_string(r.split) << ": n=" << c.total() << " tp=" << c.tp
        << " fp=" << c.fp << " fn=" << c.fn << " tn=" << c.tn << " accuracy=" << format_fixed3(r.accuracy)
        << " precision=" << format_fixed3(r.precision) << " recall=" << format_fixed3(r.recall)
        << " f1=" << format_fixed3(r.f1) << '\n';
  }
}

}  // namespace urlsentry

#include "urlsentry/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <thread>

#include "urlsentry/dataset.hpp"
#include "urlsentry/error.hpp"
#include "urlsentry/eval.hpp"
#include "urlsentry/models/model_io.hpp"
#include "urlsentry/providers.hpp"
#include "urlsentry/service.hpp"

namespace urlsentry {

namespace {

namespace fs = std::filesystem;

struct GlobalOptions {
  std::uint64_t seed = 42;
  bool offline = false;
  std::string fixtures;
  bool verbose = false;
  std::string rank_snapshot;
  int timeout_ms = 5000;
};

/// SOURCE_DATE_EPOCH when set, so runs can be pinned to one instant.
std::optional<Timestamp> pinned_time() {
  const char* env = std::getenv("SOURCE_DATE_EPOCH");
  if (env == nullptr || *env == '\0') return std::nullopt;
  char* end = nullptr;
  const long long seconds = std::strtoll(env, &end, 10);
  if (*end != '\0') throw Error(ErrorCode::ValueOutOfDomain, "SOURCE_DATE_EPOCH is not an integer");
  return Timestamp{std::chrono::seconds{seconds}};
}

Timestamp wall_clock() { return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()); }

Timestamp reference_time() { return pinned_time().value_or(wall_clock()); }

/// A model's trained_at is derived from its inputs so that retraining on the
/// same file reproduces the same bytes.
Timestamp input_time(const fs::path& input) {
  if (auto pinned = pinned_time()) return *pinned;
  std::error_code ec;
  const auto mtime = fs::last_write_time(input, ec);
  if (ec) return wall_clock();
  return std::chrono::floor<std::chrono::seconds>(std::chrono::file_clock::to_sys(mtime));
}

std::shared_ptr<const FixtureStore> load_fixtures(const GlobalOptions& g) {
  if (g.fixtures.empty()) return nullptr;
  return std::make_shared<const FixtureStore>(FixtureStore::load(g.fixtures));
}

IntelProviderSuite live_suite(const GlobalOptions& g) {
  LiveSuiteOptions options;
  if (!g.rank_snapshot.empty()) options.rank_snapshot = fs::path(g.rank_snapshot);
  options.timeout = std::chrono::milliseconds(g.timeout_ms);
  return make_live_suite(options);
}

IntelProviderSuite providers_for(const GlobalOptions& g) {
  if (g.offline) return make_fixture_suite(load_fixtures(g));
  return live_suite(g);
}

ModelKind kind_from_flag(const std::string& text) {
  const auto kind = parse_model_kind(text);
  if (!kind) throw CLI::ValidationError("--model", "unknown model '" + text + "'");
  return *kind;
}

void open_for_write(std::ofstream& out, const fs::path& path) {
  out.open(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

// --- subcommands -------------------------------------------------------------

struct ExtractArgs {
  std::string phishtank, benign, out;
  std::size_t per_class = 5000;
  bool dedupe = false;
  unsigned workers = 0;
};

int cmd_extract(const GlobalOptions& g, const ExtractArgs& a, std::ostream& out, std::ostream& err) {
  auto phish = load_phishtank_csv(a.phishtank);
  auto benign = load_benign_list(a.benign);
  if (phish.skipped + benign.skipped > 0) {
    err << "skipped " << phish.skipped << " phishing and " << benign.skipped << " benign input rows\n";
  }
  std::map<int, std::vector<UrlRecord>> by_class;
  by_class[1] = a.dedupe ? dedupe(std::move(phish.records)) : std::move(phish.records);
  by_class[0] = a.dedupe ? dedupe(std::move(benign.records)) : std::move(benign.records);
  const auto sample = sample_balanced(by_class, a.per_class, g.seed);

  const auto providers = providers_for(g);
  BuildOptions options;
  options.workers = a.workers;
  options.progress = [&err](std::size_t done, std::size_t total) {
    err << "extracted " << done << '/' << total << '\n';
  };
  const auto table = build_feature_table(sample, providers, reference_time(), options);
  write_feature_csv(table, fs::path(a.out));
  out << "wrote " << table.rows.size() << " rows to " << a.out << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string features, model, out;
  double test_frac = 0.2;
};

int cmd_train(const GlobalOptions& g, const TrainArgs& a, std::ostream& out) {
  const ModelKind kind = kind_from_flag(a.model);
  const auto table = read_feature_csv(fs::path(a.features));
  const auto split = preprocess(table, {a.test_frac, g.seed});
  TrainedModel model = train_model(split.train, default_hyperparams(kind), g.seed);
  model.trained_at = format_timestamp(input_time(a.features));
  write_reports_text({evaluate_model(model, split.train, SplitKind::Train),
                      evaluate_model(model, split.test, SplitKind::Test)},
                     out);
  save_model(model, fs::path(a.out));
  out << "saved " << to_string(kind) << " model to " << a.out << '\n';
  return kExitOk;
}

struct EvaluateArgs {
  std::string features, out;
  bool all = false;
  std::vector<std::string> models;
  double test_frac = 0.2;
};

int cmd_evaluate(const GlobalOptions& g, const EvaluateArgs& a, std::ostream& out) {
  std::vector<ModelKind> kinds;
  if (a.all) {
    kinds.assign(kAllModelKinds.begin(), kAllModelKinds.end());
  } else {
    for (const auto& m : a.models) kinds.push_back(kind_from_flag(m));
  }
  if (kinds.empty()) throw CLI::ValidationError("evaluate", "pass --all or at least one --model");

  const auto table = read_feature_csv(fs::path(a.features));
  const auto comparison = compare_models(table, {a.test_frac, g.seed}, kinds, g.seed);
  write_comparison_text(comparison, out);
  out << '\n';
  write_reports_text(comparison.reports, out);
  if (!a.out.empty()) {
    std::ofstream file;
    open_for_write(file, a.out);
    write_comparison_csv(comparison, file);
    if (!file) throw Error(ErrorCode::Io, "write failed for " + a.out);
  }
  return kExitOk;
}

struct PredictArgs {
  std::string model, url;
};

int cmd_predict(const GlobalOptions& g, const PredictArgs& a, std::ostream& out) {
  const auto model = load_model(fs::path(a.model));
  const auto providers = providers_for(g);
  const auto extraction = extract_url_features(a.url, 0, providers, reference_time());
  const auto verdict = predict(model, extraction.vector);
  char score[32];
  std::snprintf(score, sizeof score, "%.2f", verdict.score);
  out << (verdict.label == 1 ? "PHISHING" : "LEGITIMATE") << " score=" << score << '\n';
  if (extraction.degraded) spdlog::warn("some network lookups failed; defaults were used");
  return kExitOk;
}

struct ServeArgs {
  std::string model, addr{"127.0.0.1:8080"}, report_log{"reports.jsonl"}, cors_origin{"*"};
};

int cmd_serve(const GlobalOptions& g, const ServeArgs& a, std::ostream& out) {
  ServiceConfig config;
  if (!a.model.empty()) config.model = std::make_shared<const TrainedModel>(load_model(fs::path(a.model)));
  const auto fixtures = load_fixtures(g);
  config.providers = g.offline ? make_fixture_suite(fixtures) : live_suite(g);
  if (fixtures) config.fixtures = make_fixture_suite(fixtures);
  config.report_log = a.report_log;
  config.cors_origin = a.cors_origin;
  if (auto pinned = pinned_time()) config.clock = [t = *pinned] { return t; };

  const auto [host, port] = parse_listen_address(a.addr);
  Service service(std::move(config));
  const int bound = service.bind(host, port);
  out << "listening on " << host << ':' << bound << (a.model.empty() ? " (no model loaded)" : "") << std::endl;

  // Stop cleanly on SIGINT/SIGTERM: the signals are blocked here and picked
  // up by a watcher thread instead of an async handler.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::atomic<bool> done{false};
  std::thread watcher([&] {
    const timespec tick{0, 200'000'000};
    while (!done) {
      if (sigtimedwait(&signals, nullptr, &tick) > 0) {
        service.stop();
        return;
      }
    }
  });
  service.listen();
  done = true;
  watcher.join();
  pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteLoss: return kExitInternal;
    default: return kExitData;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  sink->set_pattern("%L %v");
  auto previous = spdlog::default_logger();
  spdlog::set_default_logger(std::make_shared<spdlog::logger>("urlsentry", sink));
  struct RestoreLogger {
    std::shared_ptr<spdlog::logger> logger;
    ~RestoreLogger() { spdlog::set_default_logger(logger); }
  } restore{previous};

  CLI::App app{"Phishing URL feature extraction, training and scoring", "urlsentry"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Seed for sampling, splitting and training")->capture_default_str();
  auto* fixtures = app.add_option("--fixtures", g.fixtures, "Fixture file for offline network lookups")
                       ->check(CLI::ExistingFile);
  app.add_flag("--offline", g.offline, "Answer network lookups from --fixtures")->needs(fixtures);
  app.add_flag("--verbose", g.verbose, "Debug logging");
  app.add_option("--rank-snapshot", g.rank_snapshot, "CSV of rank,domain used for live traffic ranks")
      ->check(CLI::ExistingFile);
  app.add_option("--timeout-ms", g.timeout_ms, "Per-URL budget for network lookups")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Build a feature CSV from phishing and benign URL lists");
  extract->add_option("--phishtank", ex.phishtank, "Phishing URL feed (CSV)")->required();
  extract->add_option("--benign", ex.benign, "Benign URL list")->required();
  extract->add_option("--per-class", ex.per_class, "URLs sampled per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  extract->add_option("--out", ex.out, "Output feature CSV")->required();
  extract->add_flag("--dedupe", ex.dedupe, "Drop repeated URLs before sampling");
  extract->add_option("--workers", ex.workers, "Extraction threads (0: one per core)");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train one model and report train/test metrics");
  train->add_option("--features", tr.features, "Feature CSV")->required();
  train->add_option("--model", tr.model, "tree, forest, gbt, mlp or svm")->required();
  train->add_option("--test-frac", tr.test_frac, "Held-out fraction")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  train->add_option("--out", tr.out, "Output model file")->required();

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Compare models on one shared split");
  evaluate->add_option("--features", ev.features, "Feature CSV")->required();
  evaluate->add_flag("--all", ev.all, "Every model kind, in table order");
  evaluate->add_option("--model", ev.models, "Model kinds to compare")->excludes("--all");
  evaluate->add_option("--test-frac", ev.test_frac, "Held-out fraction")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  evaluate->add_option("--out", ev.out, "Comparison CSV");

  PredictArgs pr;
  auto* predict_cmd = app.add_subcommand("predict", "Score one URL");
  predict_cmd->add_option("--model", pr.model, "Model file")->required();
  predict_cmd->add_option("--url", pr.url, "URL to score")->required();

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--model", sv.model, "Model file (omit to start without one)");
  serve->add_option("--addr", sv.addr, "HOST:PORT to listen on")->capture_default_str();
  serve->add_option("--report-log", sv.report_log, "JSONL file for user reports")->capture_default_str();
  serve->add_option("--cors-origin", sv.cors_origin, "Access-Control-Allow-Origin value")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    if (*extract) return cmd_extract(g, ex, out, err);
    if (*train) return cmd_train(g, tr, out);
    if (*evaluate) return cmd_evaluate(g, ev, out);
    if (*predict_cmd) return cmd_predict(g, pr, out);
    if (*serve) return cmd_serve(g, sv, out);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace urlsentry

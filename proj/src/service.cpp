#include "urlsentry/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <charconv>
#include <fstream>
#include <mutex>

#include "urlsentry/dataset.hpp"
#include "urlsentry/error.hpp"

namespace urlsentry {

namespace {

using nlohmann::json;

ApiResponse fail(int status, std::string message) { return {status, json{{"error", std::move(message)}}}; }

Timestamp system_now() { return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()); }

std::optional<json> parse_body(std::string_view body) {
  json parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) return std::nullopt;
  return parsed;
}

/// Cuts `text` to at most `limit` UTF-8 characters, never splitting one.
std::string truncate_chars(const std::string& text, std::size_t limit, bool& truncated) {
  std::size_t chars = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) == 0x80) continue;
    if (chars == limit) {
      truncated = true;
      return text.substr(0, i);
    }
    ++chars;
  }
  truncated = false;
  return text;
}

/// Fixture-mode suite that knows no domain, so every lookup takes the
/// failure defaults.
IntelProviderSuite empty_fixture_suite() {
  IntelProviderSuite suite;
  suite.mode = ProviderMode::Fixture;
  suite.knows_domain = [](const std::string&) { return false; };
  return suite;
}

/// Append-only JSONL writer. Ids continue from the largest id already in the
/// file.
class ReportLog {
 public:
  explicit ReportLog(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const json entry = json::parse(line, nullptr, false);
      if (entry.is_object() && entry.contains("id") && entry["id"].is_number_integer()) {
        last_id_ = std::max(last_id_, entry["id"].get<std::int64_t>());
      } else {
        spdlog::warn("{}:{}: ignoring unreadable report line", path_.string(), lineno);
      }
    }
  }

  /// Returns the new id, or nullopt if the line could not be written.
  std::optional<std::int64_t> append(const std::string& url, const std::string& comment, Timestamp at) {
    std::lock_guard lock(mutex_);
    const std::int64_t id = last_id_ + 1;
    const json entry{{"id", id}, {"url", url}, {"comment", comment}, {"received_at", format_timestamp(at)}};
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) return std::nullopt;
    out << entry.dump() << '\n';
    out.flush();
    if (!out) return std::nullopt;
    last_id_ = id;
    return id;
  }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
  std::int64_t last_id_ = 0;
};

}  // namespace

struct Service::Impl {
  explicit Impl(ServiceConfig c) : config(std::move(c)), log(config.report_log) {
    if (!config.clock) config.clock = system_now;
  }

  ServiceConfig config;
  ReportLog log;
  httplib::Server server;
  std::atomic<bool> bound{false};
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
  auto& server = impl_->server;
  const std::string origin = impl_->config.cors_origin;
  server.set_default_headers({{"Access-Control-Allow-Origin", origin},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});

  auto reply = [](httplib::Response& res, const ApiResponse& api) {
    res.status = api.status;
    res.set_content(api.body.dump(), "application/json");
  };
  server.Post("/api/v1/predict", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, predict(req.body));
  });
  server.Post("/api/v1/report", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, report(req.body));
  });
  server.Get("/api/v1/health",
             [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, health()); });
  server.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    spdlog::debug("{} {} -> {}", req.method, req.path, res.status);
  });
}

Service::~Service() { stop(); }

ApiResponse Service::predict(std::string_view body) const {
  const auto request = parse_body(body);
  if (!request || !request->contains("url") || !(*request)["url"].is_string()) return fail(400, "missing url");
  const std::string url = (*request)["url"].get<std::string>();
  if (url.empty()) return fail(400, "missing url");

  const auto& config = impl_->config;
  if (!config.model) return fail(503, "model not loaded");

  bool offline = false;
  if (request->contains("offline")) {
    const auto& flag = (*request)["offline"];
    if (!flag.is_boolean()) return fail(400, "offline must be a boolean");
    offline = flag.get<bool>();
  }
  static const IntelProviderSuite no_fixtures = empty_fixture_suite();
  const IntelProviderSuite& providers =
      offline ? (config.fixtures ? *config.fixtures : no_fixtures) : config.providers;

  UrlExtraction extraction;
  try {
    extraction = extract_url_features(url, 0, providers, config.clock());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptyUrl || e.code() == ErrorCode::MissingHost) return fail(422, "unparseable url");
    throw;
  }

  Verdict verdict;
  try {
    verdict = urlsentry::predict(*config.model, extraction.vector);
  } catch (const Error& e) {
    spdlog::error("predict failed: {}", e.what());
    return fail(500, "prediction failed");
  }

  json features = json::object();
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    features[std::string(kFeatureNames[i])] = extraction.vector.features[i];
  }
  return {200, json{{"url", url},
                    {"label", verdict.label == 1 ? "phishing" : "legitimate"},
                    {"score", verdict.score},
                    {"features", std::move(features)},
                    {"model", std::string(to_string(config.model->kind())) + "/" + config.model->schema_version},
                    {"degraded", extraction.degraded}}};
}

ApiResponse Service::report(std::string_view body) {
  const auto request = parse_body(body);
  if (!request || !request->contains("url") || !(*request)["url"].is_string()) return fail(400, "missing url");
  const std::string url = (*request)["url"].get<std::string>();
  if (url.find_first_not_of(" \t\r\n") == std::string::npos) return fail(400, "missing url");

  std::string comment;
  if (request->contains("comment") && !(*request)["comment"].is_null()) {
    if (!(*request)["comment"].is_string()) return fail(400, "comment must be a string");
    comment = (*request)["comment"].get<std::string>();
  }
  bool truncated = false;
  comment = truncate_chars(comment, kMaxCommentChars, truncated);

  const auto id = impl_->log.append(url, comment, impl_->config.clock());
  if (!id) {
    spdlog::error("cannot append to report log {}", impl_->config.report_log.string());
    return fail(507, "report log unwritable");
  }
  json out{{"status", "recorded"}, {"id", *id}};
  if (truncated) out["truncated"] = true;
  return {200, std::move(out)};
}

ApiResponse Service::health() const {
  return {200, json{{"status", "ok"},
                    {"model_loaded", impl_->config.model != nullptr},
                    {"mode", impl_->config.providers.mode == ProviderMode::Fixture ? "fixture" : "live"}}};
}

int Service::bind(const std::string& host, int port) {
  auto& server = impl_->server;
  int bound_port = port;
  if (port == 0) {
    bound_port = server.bind_to_any_port(host);
  } else if (!server.bind_to_port(host, port)) {
    bound_port = -1;
  }
  if (bound_port <= 0) throw Error(ErrorCode::Io, "cannot listen on " + host + ":" + std::to_string(port));
  impl_->bound = true;
  return bound_port;
}

void Service::listen() {
  if (!impl_->bound) throw Error(ErrorCode::Io, "listen() before bind()");
  impl_->server.listen_after_bind();
}

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

void Service::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

std::pair<std::string, int> parse_listen_address(std::string_view addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == addr.size()) {
    throw Error(ErrorCode::ValueOutOfDomain, "address must be HOST:PORT");
  }
  std::string host(addr.substr(0, colon));
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  int port = -1;
  const auto digits = addr.substr(colon + 1);
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || port < 0 || port > 65535) {
    throw Error(ErrorCode::ValueOutOfDomain, "invalid port in address " + std::string(addr));
  }
  return {host, port};
}

}  // namespace urlsentry

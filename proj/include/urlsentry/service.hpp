#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "urlsentry/models/model.hpp"
#include "urlsentry/net_intel.hpp"

namespace urlsentry {

/// Longest report comment kept, in characters.
inline constexpr std::size_t kMaxCommentChars = 1024;

struct ServiceConfig {
  std::shared_ptr<const TrainedModel> model;  // null: predict answers 503
  IntelProviderSuite providers;
  /// Used for requests that set "offline": true. Without it such requests
  /// get the all-failures defaults.
  std::optional<IntelProviderSuite> fixtures;
  std::filesystem::path report_log{"reports.jsonl"};
  std::string cors_origin{"*"};
  /// Reference time for domain-expiry features and report timestamps.
  std::function<Timestamp()> clock;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// The /api/v1 endpoints. Handlers are callable directly, which is what the
/// HTTP layer does; they are safe to call concurrently.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ApiResponse predict(std::string_view body) const;
  ApiResponse report(std::string_view body);
  ApiResponse health() const;

  /// Binds the listener; port 0 picks a free port. Returns the bound port and
  /// throws Error{Io} if binding fails.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Requires bind().
  void listen();
  /// Blocks until a concurrent listen() is accepting connections.
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Splits "HOST:PORT"; the host may be a bracketed IPv6 literal.
std::pair<std::string, int> parse_listen_address(std::string_view addr);

}  // namespace urlsentry

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

namespace urlsentry {

using Timestamp = std::chrono::sys_seconds;

/// Raw facts gathered about one domain (and the page behind one URL).
struct DomainIntel {
  bool dns_resolves = false;
  std::optional<Timestamp> whois_created;
  std::optional<Timestamp> whois_expires;
  std::optional<std::uint64_t> traffic_rank;
  std::optional<std::string> page_markup;
  std::optional<int> redirect_count;
  Timestamp fetched_at{};
  /// Set when any provider failed or timed out and a failure default was used.
  bool degraded = false;
};

struct DomainFeatures {
  int dns_record = 0;
  int web_traffic = 0;
  int domain_age = 0;
  int domain_end = 0;
};

struct ContentFeatures {
  int iframe = 0;
  int mouse_over = 0;
  int right_click = 0;
  int web_forwards = 0;
};

struct WhoisDates {
  std::optional<Timestamp> created;
  std::optional<Timestamp> expires;
};

struct FetchedPage {
  std::string markup;
  int redirect_count = 0;
};

inline constexpr std::uint64_t kTrafficRankCutoff = 100000;
inline constexpr std::chrono::days kMonth{30};
inline constexpr std::size_t kMaxPageBytes = 1 << 20;
inline constexpr int kMaxRedirects = 10;

// Provider capabilities. Implementations may throw or block; the gathering
// code bounds every call by the suite timeout and treats both as failure.

class DnsProvider {
 public:
  virtual ~DnsProvider() = default;
  virtual bool resolves(const std::string& domain) = 0;
};

class WhoisProvider {
 public:
  virtual ~WhoisProvider() = default;
  virtual std::optional<WhoisDates> lookup(const std::string& domain) = 0;
};

class RankProvider {
 public:
  virtual ~RankProvider() = default;
  virtual std::optional<std::uint64_t> rank(const std::string& domain) = 0;
};

class ContentFetcher {
 public:
  virtual ~ContentFetcher() = default;
  virtual std::optional<FetchedPage> fetch(const std::string& url) = 0;
};

enum class ProviderMode { Live, Fixture };

/// Bounded, TTL-limited cache of the per-domain facts (DNS, WHOIS, rank).
/// Safe to share between threads.
class IntelCache {
 public:
  struct Entry {
    bool dns_resolves = false;
    WhoisDates whois;
    std::optional<std::uint64_t> rank;
    bool degraded = false;
  };

  explicit IntelCache(std::size_t capacity = 4096,
                      std::chrono::seconds ttl = std::chrono::hours(1))
      : capacity_(capacity), ttl_(ttl) {}

  std::optional<Entry> get(const std::string& domain);
  void put(const std::string& domain, Entry entry);
  std::size_t size() const;

 private:
  using Clock = std::chrono::steady_clock;
  struct Slot {
    Entry entry;
    Clock::time_point inserted;
    std::list<std::string>::iterator order;
  };

  std::size_t capacity_;
  std::chrono::seconds ttl_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, Slot> slots_;
  std::list<std::string> order_;  // oldest first
};

struct IntelProviderSuite {
  std::shared_ptr<DnsProvider> dns;
  std::shared_ptr<WhoisProvider> whois;
  std::shared_ptr<RankProvider> rank;
  std::shared_ptr<ContentFetcher> content;
  std::chrono::milliseconds timeout{5000};
  ProviderMode mode = ProviderMode::Live;
  /// Fixture mode only: answers whether a domain has a fixture entry.
  std::function<bool(const std::string&)> knows_domain;
  std::shared_ptr<IntelCache> cache;
};

/// Starts fn on a detached worker. fn must own (by value) everything it
/// touches, since the worker may outlive the caller's wait.
template <typename Fn>
auto start_detached(Fn fn) -> std::future<std::invoke_result_t<Fn>> {
  using R = std::invoke_result_t<Fn>;
  auto promise = std::make_shared<std::promise<R>>();
  auto future = promise->get_future();
  std::thread([promise, fn = std::move(fn)]() mutable {
    try {
      promise->set_value(fn());
    } catch (...) {
      try {
        promise->set_exception(std::current_exception());
      } catch (...) {
      }
    }
  }).detach();
  return future;
}

/// Result of `future` if it is ready by `deadline` and did not throw.
template <typename R>
std::optional<R> await_until(std::future<R>& future, std::chrono::steady_clock::time_point deadline) {
  if (!future.valid() || future.wait_until(deadline) != std::future_status::ready) return std::nullopt;
  try {
    return future.get();
  } catch (...) {
    return std::nullopt;
  }
}

/// Runs fn on a detached worker and waits at most `timeout`. Returns nullopt
/// on timeout or if fn threw. A timed-out worker keeps running in the
/// background.
template <typename Fn>
auto call_with_timeout(Fn fn, std::chrono::milliseconds timeout)
    -> std::optional<std::invoke_result_t<Fn>> {
  auto future = start_detached(std::move(fn));
  return await_until(future, std::chrono::steady_clock::now() + timeout);
}

/// All lookups run concurrently against one shared deadline of
/// `providers.timeout`. Throws Error{FixtureMissing} in fixture mode for a
/// domain without an entry.
DomainIntel gather_domain_intel(const std::string& domain, const std::string& url,
                                const IntelProviderSuite& providers);

/// The all-failures record: what gathering yields when nothing answers.
DomainIntel unreachable_intel(Timestamp fetched_at);

std::optional<FetchedPage> fetch_page(const std::string& url, const IntelProviderSuite& providers);

DomainFeatures derive_domain_features(const DomainIntel& intel, Timestamp now);

ContentFeatures derive_content_features(const std::optional<std::string>& markup,
                                        std::optional<int> redirect_count);

// Static markup probes behind derive_content_features.
bool has_hidden_iframe(std::string_view markup);
bool has_status_bar_rewrite(std::string_view markup);
bool disables_right_click(std::string_view markup);

/// Parses "YYYY-MM-DD" (optionally followed by a time part, which is ignored)
/// into midnight UTC of that day.
std::optional<Timestamp> parse_date(std::string_view text);
std::string format_date(Timestamp t);
/// YYYY-MM-DDTHH:MM:SSZ
std::string format_timestamp(Timestamp t);

}  // namespace urlsentry

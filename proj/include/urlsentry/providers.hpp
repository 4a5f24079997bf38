#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "urlsentry/net_intel.hpp"

namespace urlsentry {

// ---------------------------------------------------------------------------
// Live providers

/// getaddrinfo-based resolvability check.
class SystemDnsProvider final : public DnsProvider {
 public:
  bool resolves(const std::string& domain) override;
};

/// Port-43 WHOIS client. Asks whois.iana.org for the TLD's registry, then
/// queries that registry for the domain.
class WhoisClient final : public WhoisProvider {
 public:
  explicit WhoisClient(std::chrono::milliseconds io_timeout = std::chrono::seconds(5))
      : io_timeout_(io_timeout) {}

  std::optional<WhoisDates> lookup(const std::string& domain) override;

 private:
  std::string query(const std::string& server, const std::string& request) const;

  std::chrono::milliseconds io_timeout_;
};

/// Extracts creation/expiration dates from a WHOIS response body. Only the
/// common YYYY-MM-DD forms are recognised.
WhoisDates parse_whois_response(std::string_view response);

/// Ranks from a local top-sites snapshot ("rank,domain" per line).
class SnapshotRankProvider final : public RankProvider {
 public:
  static SnapshotRankProvider load(const std::filesystem::path& path);
  static SnapshotRankProvider parse(std::string_view text);

  std::optional<std::uint64_t> rank(const std::string& domain) override;
  std::size_t size() const noexcept { return ranks_.size(); }

 private:
  std::unordered_map<std::string, std::uint64_t> ranks_;
};

/// HTTP(S) GET that follows redirects by hand so they can be counted.
class HttpContentFetcher final : public ContentFetcher {
 public:
  explicit HttpContentFetcher(std::chrono::milliseconds io_timeout = std::chrono::seconds(5))
      : io_timeout_(io_timeout) {}

  std::optional<FetchedPage> fetch(const std::string& url) override;

 private:
  std::chrono::milliseconds io_timeout_;
};

struct LiveSuiteOptions {
  std::optional<std::filesystem::path> rank_snapshot;
  std::chrono::milliseconds timeout{5000};
  bool cache = true;
};

IntelProviderSuite make_live_suite(const LiveSuiteOptions& options = {});

// ---------------------------------------------------------------------------
// Fixture providers

struct FixtureEntry {
  bool dns = false;
  std::optional<Timestamp> created;
  std::optional<Timestamp> expires;
  std::optional<std::uint64_t> rank;
  std::optional<std::string> html;  // file contents, already loaded
  std::optional<int> redirects;
};

/// Facts keyed by domain, read from a JSON fixtures file:
///   { "example.com": {"dns": true, "created": "2005-03-01", "expires": null,
///                     "rank": 2041, "html": "pages/example.html", "redirects": 0} }
/// "html" paths are relative to the fixtures file.
class FixtureStore {
 public:
  static FixtureStore load(const std::filesystem::path& path);
  static FixtureStore parse(std::string_view json_text, const std::filesystem::path& base_dir);

  const FixtureEntry* find(const std::string& domain) const;
  bool contains(const std::string& domain) const { return find(domain) != nullptr; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<std::string, FixtureEntry> entries_;
};

IntelProviderSuite make_fixture_suite(std::shared_ptr<const FixtureStore> store);

}  // namespace urlsentry

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace urlsentry {

enum class Scheme { Http, Https, Other };

struct UrlParts {
  std::string raw;
  Scheme scheme = Scheme::Other;
  std::string host;    // lowercased, userinfo and port removed
  std::string domain;  // host without one leading "www."
  std::vector<std::string> path_segments;
  std::size_t full_length = 0;  // code points in raw
};

struct LexicalFeatures {
  int have_ip = 0;
  int have_at = 0;
  int url_length = 0;
  int url_depth = 0;
  int redirection = 0;
  int https_domain = 0;
  int tiny_url = 0;
  int prefix_suffix = 0;
};

/// URLs at or above this many characters are flagged as long.
inline constexpr std::size_t kLongUrlThreshold = 54;

/// Set of URL-shortening service domains. Lookup matches the domain itself
/// or any of its parent suffixes, so "m.bit.ly" hits "bit.ly".
class ShortenerList {
 public:
  ShortenerList() = default;

  /// One lowercase domain per line; blank lines and "#" comments are ignored.
  static ShortenerList parse(std::string_view text);
  static ShortenerList load(const std::filesystem::path& path);

  bool matches(std::string_view domain) const;
  std::size_t size() const noexcept { return domains_.size(); }

 private:
  std::unordered_set<std::string> domains_;
};

/// The list compiled in from data/shorteners.txt.
const ShortenerList& bundled_shorteners();

/// Throws Error{EmptyUrl} for empty/whitespace input and Error{MissingHost}
/// when no authority can be found (e.g. "http://").
UrlParts parse_url(std::string_view raw);

int url_depth(const UrlParts& parts) noexcept;
int redirection_flag(std::string_view raw) noexcept;

bool is_ipv4_literal(std::string_view host) noexcept;
bool is_bracketed_ipv6_literal(std::string_view host) noexcept;

LexicalFeatures extract_lexical(const UrlParts& parts,
                                const ShortenerList& shorteners = bundled_shorteners());

std::size_t utf8_length(std::string_view text) noexcept;

}  // namespace urlsentry

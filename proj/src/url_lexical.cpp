#include "urlsentry/url_lexical.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "urlsentry/error.hpp"
#include "urlsentry/shorteners_data.hpp"

namespace urlsentry {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(first, last - first + 1);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool starts_with_icase(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  }
  return true;
}

std::string strip_port(std::string_view authority) {
  if (!authority.empty() && authority.front() == '[') {
    const auto close = authority.find(']');
    if (close != std::string_view::npos) return std::string(authority.substr(0, close + 1));
    return std::string(authority);
  }
  const auto colon = authority.rfind(':');
  if (colon == std::string_view::npos) return std::string(authority);
  const auto port = authority.substr(colon + 1);
  if (std::all_of(port.begin(), port.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return std::string(authority.substr(0, colon));
  }
  return std::string(authority);
}

}  // namespace

ShortenerList ShortenerList::parse(std::string_view text) {
  ShortenerList list;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto entry = trim(line);
    if (!entry.empty()) list.domains_.insert(to_lower(entry));
  }
  return list;
}

ShortenerList ShortenerList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open shortener list " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool ShortenerList::matches(std::string_view domain) const {
  std::string candidate = to_lower(domain);
  while (!candidate.empty()) {
    if (domains_.contains(candidate)) return true;
    const auto dot = candidate.find('.');
    if (dot == std::string::npos) break;
    candidate.erase(0, dot + 1);
  }
  return false;
}

const ShortenerList& bundled_shorteners() {
  static const ShortenerList list = ShortenerList::parse(detail::kBundledShorteners);
  return list;
}

std::size_t utf8_length(std::string_view text) noexcept {
  return static_cast<std::size_t>(std::count_if(
      text.begin(), text.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

UrlParts parse_url(std::string_view raw) {
  const auto text = trim(raw);
  if (text.empty()) throw Error(ErrorCode::EmptyUrl, "url is empty");

  UrlParts parts;
  parts.raw = std::string(raw);
  parts.full_length = utf8_length(raw);

  std::string_view rest = text;
  if (starts_with_icase(text, "https://")) {
    parts.scheme = Scheme::Https;
    rest.remove_prefix(8);
  } else if (starts_with_icase(text, "http://")) {
    parts.scheme = Scheme::Http;
    rest.remove_prefix(7);
  }

  const auto authority_end = rest.find_first_of("/?#");
  auto authority = rest.substr(0, authority_end);
  if (const auto at = authority.rfind('@'); at != std::string_view::npos) {
    authority.remove_prefix(at + 1);
  }
  parts.host = to_lower(strip_port(authority));
  if (parts.host.empty()) throw Error(ErrorCode::MissingHost, "url has no host: " + std::string(text));

  parts.domain = parts.host;
  if (parts.domain.starts_with("www.")) parts.domain.erase(0, 4);

  if (authority_end != std::string_view::npos && rest[authority_end] == '/') {
    auto path = rest.substr(authority_end);
    path = path.substr(0, path.find_first_of("?#"));
    std::size_t pos = 0;
    while (pos < path.size()) {
      const auto next = path.find('/', pos);
      const auto segment = path.substr(pos, next == std::string_view::npos ? next : next - pos);
      if (!segment.empty()) parts.path_segments.emplace_back(segment);
      if (next == std::string_view::npos) break;
      pos = next + 1;
    }
  }
  return parts;
}

int url_depth(const UrlParts& parts) noexcept { return static_cast<int>(parts.path_segments.size()); }

int redirection_flag(std::string_view raw) noexcept {
  const auto pos = raw.rfind("//");
  return pos != std::string_view::npos && pos > 7 ? 1 : 0;
}

bool is_ipv4_literal(std::string_view host) noexcept {
  int octets = 0;
  std::size_t pos = 0;
  while (true) {
    const auto dot = host.find('.', pos);
    const auto part = host.substr(pos, dot == std::string_view::npos ? dot : dot - pos);
    if (part.empty() || part.size() > 3) return false;
    int value = 0;
    for (char c : part) {
      if (c < '0' || c > '9') return false;
      value = value * 10 + (c - '0');
    }
    if (value > 255) return false;
    ++octets;
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  return octets == 4;
}

bool is_bracketed_ipv6_literal(std::string_view host) noexcept {
  if (host.size() < 3 || host.front() != '[' || host.back() != ']') return false;
  const std::string inner(host.substr(1, host.size() - 2));
  in6_addr addr{};
  return inet_pton(AF_INET6, inner.c_str(), &addr) == 1;
}

LexicalFeatures extract_lexical(const UrlParts& parts, const ShortenerList& shorteners) {
  LexicalFeatures f;
  f.have_ip = is_ipv4_literal(parts.domain) || is_bracketed_ipv6_literal(parts.domain);
  f.have_at = parts.raw.find('@') != std::string::npos;
  f.url_length = parts.full_length >= kLongUrlThreshold;
  f.url_depth = url_depth(parts);
  f.redirection = redirection_flag(parts.raw);
  f.https_domain = parts.domain.find("http") != std::string::npos;
  f.tiny_url = shorteners.matches(parts.domain);
  f.prefix_suffix = parts.domain.find('-') != std::string::npos;
  return f;
}

}  // namespace urlsentry

#include <netdb.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "urlsentry/error.hpp"
#include "urlsentry/providers.hpp"
#include "urlsentry/url_lexical.hpp"

namespace urlsentry {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

class Socket {
 public:
  explicit Socket(int fd) : fd_(fd) {}
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() {
    if (fd_ >= 0) ::close(fd_);
  }
  int fd() const { return fd_; }

 private:
  int fd_;
};

struct AddrInfo {
  addrinfo* head = nullptr;
  ~AddrInfo() {
    if (head) freeaddrinfo(head);
  }
};

}  // namespace

bool SystemDnsProvider::resolves(const std::string& domain) {
  std::string host = domain;
  if (host.size() > 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  AddrInfo result;
  const int rc = getaddrinfo(host.c_str(), nullptr, &hints, &result.head);
  if (rc == EAI_AGAIN || rc == EAI_SYSTEM || rc == EAI_MEMORY) {
    throw Error(ErrorCode::Io, std::string("dns lookup failed: ") + gai_strerror(rc));
  }
  return rc == 0 && result.head != nullptr;
}

WhoisDates parse_whois_response(std::string_view response) {
  static constexpr std::string_view kCreated[] = {
      "creation date", "created", "created on", "registered on", "registration time",
      "domain registration date", "registered", "domain record activated"};
  static constexpr std::string_view kExpires[] = {
      "registry expiry date", "registrar registration expiration date", "expiration date",
      "expiry date", "expires", "expires on", "paid-till", "domain expiration date",
      "registry expiration date"};

  WhoisDates dates;
  std::istringstream in{std::string(response)};
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = lower(trim(std::string_view(line).substr(0, colon)));
    const auto value = trim(std::string_view(line).substr(colon + 1));
    const auto matches = [&](const auto& keys) {
      return std::find(std::begin(keys), std::end(keys), key) != std::end(keys);
    };
    if (!dates.created && matches(kCreated)) dates.created = parse_date(value);
    if (!dates.expires && matches(kExpires)) dates.expires = parse_date(value);
  }
  return dates;
}

std::string WhoisClient::query(const std::string& server, const std::string& request) const {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  AddrInfo addrs;
  if (getaddrinfo(server.c_str(), "43", &hints, &addrs.head) != 0) {
    throw Error(ErrorCode::Io, "cannot resolve whois server " + server);
  }
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(io_timeout_.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((io_timeout_.count() % 1000) * 1000);

  for (addrinfo* ai = addrs.head; ai != nullptr; ai = ai->ai_next) {
    Socket sock(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (sock.fd() < 0) continue;
    setsockopt(sock.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    setsockopt(sock.fd(), SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
    if (::connect(sock.fd(), ai->ai_addr, ai->ai_addrlen) != 0) continue;
    const std::string line = request + "\r\n";
    if (::send(sock.fd(), line.data(), line.size(), MSG_NOSIGNAL) != static_cast<ssize_t>(line.size())) continue;
    std::string response;
    char buf[4096];
    ssize_t n;
    while ((n = ::recv(sock.fd(), buf, sizeof buf, 0)) > 0) {
      response.append(buf, static_cast<std::size_t>(n));
      if (response.size() > 256 * 1024) break;
    }
    if (n < 0 && response.empty()) throw Error(ErrorCode::Io, "whois read failed on " + server);
    return response;
  }
  throw Error(ErrorCode::Io, "cannot connect to whois server " + server);
}

std::optional<WhoisDates> WhoisClient::lookup(const std::string& domain) {
  if (is_ipv4_literal(domain) || is_bracketed_ipv6_literal(domain)) return std::nullopt;
  const auto dot = domain.rfind('.');
  const std::string tld = dot == std::string::npos ? domain : domain.substr(dot + 1);

  std::string server;
  std::istringstream iana{query("whois.iana.org", tld)};
  std::string line;
  while (std::getline(iana, line)) {
    if (lower(line).starts_with("refer:")) {
      server = std::string(trim(std::string_view(line).substr(6)));
      break;
    }
  }
  if (server.empty()) return std::nullopt;

  const WhoisDates dates = parse_whois_response(query(server, domain));
  if (!dates.created && !dates.expires) return std::nullopt;
  return dates;
}

SnapshotRankProvider SnapshotRankProvider::parse(std::string_view text) {
  SnapshotRankProvider provider;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    const auto rank_text = trim(std::string_view(line).substr(0, comma));
    std::uint64_t rank = 0;
    bool numeric = !rank_text.empty();
    for (char c : rank_text) {
      if (!std::isdigit(static_cast<unsigned char>(c))) numeric = false;
      else rank = rank * 10 + static_cast<std::uint64_t>(c - '0');
    }
    if (!numeric || rank == 0) continue;  // header line or junk
    const std::string domain = lower(trim(std::string_view(line).substr(comma + 1)));
    if (!domain.empty()) provider.ranks_.try_emplace(domain, rank);
  }
  return provider;
}

SnapshotRankProvider SnapshotRankProvider::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open rank snapshot " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::optional<std::uint64_t> SnapshotRankProvider::rank(const std::string& domain) {
  std::string key = lower(domain);
  if (const auto it = ranks_.find(key); it != ranks_.end()) return it->second;
  if (key.starts_with("www.")) key.erase(0, 4);
  else key = "www." + key;
  if (const auto it = ranks_.find(key); it != ranks_.end()) return it->second;
  return std::nullopt;
}

namespace {

struct Target {
  std::string origin;  // scheme://host[:port]
  std::string path;    // path + query
};

std::optional<Target> split_target(const std::string& url) {
  std::string text = url;
  const std::string lowered = lower(text.substr(0, 8));
  if (!lowered.starts_with("http://") && !lowered.starts_with("https://")) text = "http://" + text;
  const auto scheme_end = text.find("://") + 3;
  const auto path_start = text.find_first_of("/?#", scheme_end);
  Target t;
  t.origin = text.substr(0, path_start);
  if (t.origin.size() <= scheme_end) return std::nullopt;
  t.path = path_start == std::string::npos ? "/" : text.substr(path_start);
  if (const auto hash = t.path.find('#'); hash != std::string::npos) t.path.erase(hash);
  if (t.path.empty() || t.path.front() != '/') t.path.insert(0, "/");
  return t;
}

}  // namespace

std::optional<FetchedPage> HttpContentFetcher::fetch(const std::string& url) {
  auto target = split_target(url);
  if (!target) return std::nullopt;

  const auto secs = static_cast<time_t>(io_timeout_.count() / 1000);
  const auto usecs = static_cast<time_t>((io_timeout_.count() % 1000) * 1000);
  for (int redirects = 0; redirects <= kMaxRedirects; ++redirects) {
    httplib::Client client(target->origin);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_follow_location(false);
    auto res = client.Get(target->path);
    if (!res) throw Error(ErrorCode::Io, "GET " + target->origin + target->path + " failed: " +
                                             httplib::to_string(res.error()));
    if (res->status >= 300 && res->status < 400 && res->has_header("Location")) {
      const std::string location = res->get_header_value("Location");
      if (location.starts_with("/")) {
        target->path = location;
      } else {
        auto next = split_target(location);
        if (!next) return std::nullopt;
        target = std::move(next);
      }
      continue;
    }
    if (res->status < 200 || res->status >= 300) return std::nullopt;
    FetchedPage page;
    page.markup = std::move(res->body);
    if (page.markup.size() > kMaxPageBytes) page.markup.resize(kMaxPageBytes);
    page.redirect_count = redirects;
    return page;
  }
  spdlog::info("redirect limit ({}) exceeded for {}", kMaxRedirects, url);
  return std::nullopt;
}

IntelProviderSuite make_live_suite(const LiveSuiteOptions& options) {
  IntelProviderSuite suite;
  suite.mode = ProviderMode::Live;
  suite.timeout = options.timeout;
  suite.dns = std::make_shared<SystemDnsProvider>();
  suite.whois = std::make_shared<WhoisClient>(options.timeout);
  if (options.rank_snapshot) {
    suite.rank = std::make_shared<SnapshotRankProvider>(SnapshotRankProvider::load(*options.rank_snapshot));
  } else {
    // No snapshot: every domain is unranked, which is a normal answer.
    suite.rank = std::make_shared<SnapshotRankProvider>();
  }
  suite.content = std::make_shared<HttpContentFetcher>(options.timeout);
  if (options.cache) suite.cache = std::make_shared<IntelCache>();
  return suite;
}

}  // namespace urlsentry

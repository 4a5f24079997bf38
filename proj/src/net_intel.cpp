#include "urlsentry/net_intel.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "urlsentry/error.hpp"

namespace urlsentry {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string without_space(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  }
  return out;
}

std::string without_quotes(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c != '"' && c != '\'') out.push_back(c);
  }
  return out;
}

/// Text of the tag that contains position `pos`, up to the closing '>'.
std::string_view tag_tail(std::string_view lower, std::size_t pos) {
  const auto end = lower.find('>', pos);
  return lower.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
}

}  // namespace

std::optional<IntelCache::Entry> IntelCache::get(const std::string& domain) {
  std::lock_guard lock(mutex_);
  const auto it = slots_.find(domain);
  if (it == slots_.end()) return std::nullopt;
  if (Clock::now() - it->second.inserted > ttl_) {
    order_.erase(it->second.order);
    slots_.erase(it);
    return std::nullopt;
  }
  return it->second.entry;
}

void IntelCache::put(const std::string& domain, Entry entry) {
  std::lock_guard lock(mutex_);
  if (const auto it = slots_.find(domain); it != slots_.end()) {
    order_.erase(it->second.order);
    slots_.erase(it);
  }
  while (!order_.empty() && slots_.size() >= capacity_) {
    slots_.erase(order_.front());
    order_.pop_front();
  }
  if (capacity_ == 0) return;
  order_.push_back(domain);
  slots_.emplace(domain, Slot{std::move(entry), Clock::now(), std::prev(order_.end())});
}

std::size_t IntelCache::size() const {
  std::lock_guard lock(mutex_);
  return slots_.size();
}

DomainIntel unreachable_intel(Timestamp fetched_at) {
  DomainIntel intel;
  intel.fetched_at = fetched_at;
  intel.degraded = true;
  return intel;
}

namespace {

using Deadline = std::chrono::steady_clock::time_point;

struct PageOutcome {
  std::optional<FetchedPage> page;
  bool failed = false;
};

PageOutcome page_outcome(std::future<std::optional<FetchedPage>>& pending, const std::string& url, Deadline deadline) {
  auto answer = await_until(pending, deadline);
  if (!answer) return {std::nullopt, true};
  auto page = std::move(*answer);
  if (page) {
    if (page->redirect_count > kMaxRedirects) {
      spdlog::info("fetch of {} exceeded {} redirects", url, kMaxRedirects);
      return {std::nullopt, false};
    }
    if (page->markup.size() > kMaxPageBytes) page->markup.resize(kMaxPageBytes);
  }
  return {std::move(page), false};
}

std::future<std::optional<FetchedPage>> start_fetch(const std::string& url, const IntelProviderSuite& providers) {
  if (!providers.content) return {};
  return start_detached([p = providers.content, url] { return p->fetch(url); });
}

}  // namespace

DomainIntel gather_domain_intel(const std::string& domain, const std::string& url,
                                const IntelProviderSuite& providers) {
  if (domain.empty()) throw Error(ErrorCode::MissingHost, "domain is empty");
  if (providers.mode == ProviderMode::Fixture && providers.knows_domain &&
      !providers.knows_domain(domain)) {
    throw Error(ErrorCode::FixtureMissing, "no fixture for domain " + domain);
  }

  DomainIntel intel;
  intel.fetched_at = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  const Deadline deadline = std::chrono::steady_clock::now() + providers.timeout;

  std::optional<IntelCache::Entry> facts;
  if (providers.cache) facts = providers.cache->get(domain);

  std::future<bool> dns;
  std::future<std::optional<WhoisDates>> whois;
  std::future<std::optional<std::uint64_t>> rank;
  if (!facts) {
    if (providers.dns) dns = start_detached([p = providers.dns, domain] { return p->resolves(domain); });
    if (providers.whois) whois = start_detached([p = providers.whois, domain] { return p->lookup(domain); });
    if (providers.rank) rank = start_detached([p = providers.rank, domain] { return p->rank(domain); });
  }
  auto page = start_fetch(url, providers);

  if (!facts) {
    IntelCache::Entry fresh;
    // A missing provider counts as a failed one.
    const auto dns_answer = await_until(dns, deadline);
    fresh.dns_resolves = dns_answer.value_or(false);
    fresh.degraded |= !dns_answer;

    const auto whois_answer = await_until(whois, deadline);
    fresh.degraded |= !whois_answer;
    if (whois_answer && *whois_answer) {
      fresh.whois = **whois_answer;
      if (fresh.whois.created && fresh.whois.expires && *fresh.whois.expires < *fresh.whois.created) {
        spdlog::debug("whois for {} has expiry before creation; ignoring dates", domain);
        fresh.whois = {};
      }
    }

    const auto rank_answer = await_until(rank, deadline);
    fresh.degraded |= !rank_answer;
    if (rank_answer && *rank_answer && **rank_answer >= 1) fresh.rank = **rank_answer;

    // Failed lookups are not cached so a transient outage is retried.
    if (providers.cache && !fresh.degraded) providers.cache->put(domain, fresh);
    facts = std::move(fresh);
  }
  intel.dns_resolves = facts->dns_resolves;
  intel.whois_created = facts->whois.created;
  intel.whois_expires = facts->whois.expires;
  intel.traffic_rank = facts->rank;
  intel.degraded = facts->degraded;

  auto outcome = page_outcome(page, url, deadline);
  intel.degraded |= outcome.failed;
  if (outcome.page) {
    intel.page_markup = std::move(outcome.page->markup);
    intel.redirect_count = outcome.page->redirect_count;
  }
  return intel;
}

std::optional<FetchedPage> fetch_page(const std::string& url, const IntelProviderSuite& providers) {
  auto pending = start_fetch(url, providers);
  return page_outcome(pending, url, std::chrono::steady_clock::now() + providers.timeout).page;
}

DomainFeatures derive_domain_features(const DomainIntel& intel, Timestamp now) {
  DomainFeatures f;
  f.dns_record = intel.dns_resolves ? 0 : 1;
  f.web_traffic = !intel.traffic_rank || *intel.traffic_rank < kTrafficRankCutoff ? 1 : 0;
  if (intel.whois_created && intel.whois_expires) {
    const auto age = *intel.whois_expires - *intel.whois_created;
    f.domain_age = age > 12 * kMonth ? 1 : 0;
  }
  if (intel.whois_expires) {
    const auto remaining = *intel.whois_expires - now;
    f.domain_end = remaining > 6 * kMonth ? 1 : 0;
  }
  return f;
}

bool has_hidden_iframe(std::string_view markup) {
  const std::string lower = lowercase(markup);
  for (auto pos = lower.find("<iframe"); pos != std::string::npos; pos = lower.find("<iframe", pos + 1)) {
    const std::string tag = without_space(tag_tail(lower, pos));
    if (const auto fb = tag.find("frameborder="); fb != std::string::npos) {
      const std::string value = without_quotes(tag.substr(fb + 12, 3));
      if (!value.empty() && value[0] == '0' && (value.size() == 1 || !std::isdigit(static_cast<unsigned char>(value[1])))) {
        return true;
      }
    }
    if (tag.find("display:none") != std::string::npos || tag.find("visibility:hidden") != std::string::npos) {
      return true;
    }
  }
  return false;
}

bool has_status_bar_rewrite(std::string_view markup) {
  const std::string lower = lowercase(markup);
  for (auto pos = lower.find("onmouseover"); pos != std::string::npos;
       pos = lower.find("onmouseover", pos + 1)) {
    const std::string handler = without_space(tag_tail(lower, pos));
    for (auto s = handler.find("window.status="); s != std::string::npos;
         s = handler.find("window.status=", s + 1)) {
      if (s + 14 >= handler.size() || handler[s + 14] != '=') return true;
    }
  }
  return false;
}

bool disables_right_click(std::string_view markup) {
  const std::string compact = without_space(lowercase(markup));
  if (compact.find("event.button==2") != std::string::npos) return true;
  for (auto pos = compact.find("oncontextmenu"); pos != std::string::npos;
       pos = compact.find("oncontextmenu", pos + 1)) {
    const std::string tail = without_quotes(compact.substr(pos + 13, 64));
    if (tail.starts_with("=returnfalse")) return true;
    if (tail.starts_with("=function(")) {
      const auto body = tail.find("){");
      if (body != std::string::npos && tail.compare(body + 2, 11, "returnfalse") == 0) return true;
    }
  }
  return false;
}

ContentFeatures derive_content_features(const std::optional<std::string>& markup,
                                        std::optional<int> redirect_count) {
  ContentFeatures f;
  f.right_click = 1;
  if (!markup) {
    f.web_forwards = 1;
    return f;
  }
  f.iframe = has_hidden_iframe(*markup);
  f.mouse_over = has_status_bar_rewrite(*markup);
  f.right_click = disables_right_click(*markup) ? 0 : 1;
  f.web_forwards = redirect_count && *redirect_count > 2 ? 1 : 0;
  return f;
}

std::optional<Timestamp> parse_date(std::string_view text) {
  const auto first = text.find_first_not_of(" \t");
  if (first == std::string_view::npos) return std::nullopt;
  text.remove_prefix(first);
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0, d = 0;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
  }
  y = (text[0] - '0') * 1000 + (text[1] - '0') * 100 + (text[2] - '0') * 10 + (text[3] - '0');
  m = static_cast<unsigned>((text[5] - '0') * 10 + (text[6] - '0'));
  d = static_cast<unsigned>((text[8] - '0') * 10 + (text[9] - '0'));
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  if (text.size() > 10 && text[10] != 'T' && text[10] != ' ' && text[10] != 't') return std::nullopt;
  return Timestamp{std::chrono::sys_days{ymd}};
}

std::string format_date(Timestamp t) {
  const std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(t)};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_timestamp(Timestamp t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_date(t).c_str(), static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()), static_cast<int>(hms.seconds().count()));
  return buf;
}

}  // namespace urlsentry

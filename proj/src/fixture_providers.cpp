#include <json.hpp>

#include <fstream>
#include <sstream>

#include "urlsentry/error.hpp"
#include "urlsentry/providers.hpp"
#include "urlsentry/url_lexical.hpp"

namespace urlsentry {

namespace {

using nlohmann::json;

std::optional<Timestamp> date_field(const json& obj, const char* key, const std::string& domain) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  const auto parsed = parse_date(obj[key].get<std::string>());
  if (!parsed) throw Error(ErrorCode::Io, "fixture " + domain + ": bad date in '" + key + "'");
  return parsed;
}

class FixtureDns final : public DnsProvider {
 public:
  explicit FixtureDns(std::shared_ptr<const FixtureStore> store) : store_(std::move(store)) {}
  bool resolves(const std::string& domain) override { return entry(*store_, domain).dns; }

  static const FixtureEntry& entry(const FixtureStore& store, const std::string& domain) {
    const auto* e = store.find(domain);
    if (!e) throw Error(ErrorCode::FixtureMissing, "no fixture for domain " + domain);
    return *e;
  }

 private:
  std::shared_ptr<const FixtureStore> store_;
};

class FixtureWhois final : public WhoisProvider {
 public:
  explicit FixtureWhois(std::shared_ptr<const FixtureStore> store) : store_(std::move(store)) {}
  std::optional<WhoisDates> lookup(const std::string& domain) override {
    const auto& e = FixtureDns::entry(*store_, domain);
    if (!e.created && !e.expires) return std::nullopt;
    return WhoisDates{e.created, e.expires};
  }

 private:
  std::shared_ptr<const FixtureStore> store_;
};

class FixtureRank final : public RankProvider {
 public:
  explicit FixtureRank(std::shared_ptr<const FixtureStore> store) : store_(std::move(store)) {}
  std::optional<std::uint64_t> rank(const std::string& domain) override {
    return FixtureDns::entry(*store_, domain).rank;
  }

 private:
  std::shared_ptr<const FixtureStore> store_;
};

class FixtureContent final : public ContentFetcher {
 public:
  explicit FixtureContent(std::shared_ptr<const FixtureStore> store) : store_(std::move(store)) {}
  std::optional<FetchedPage> fetch(const std::string& url) override {
    const auto& e = FixtureDns::entry(*store_, parse_url(url).domain);
    if (!e.html) return std::nullopt;
    return FetchedPage{*e.html, e.redirects.value_or(0)};
  }

 private:
  std::shared_ptr<const FixtureStore> store_;
};

}  // namespace

FixtureStore FixtureStore::parse(std::string_view json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Io, std::string("fixtures file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::Io, "fixtures file must be a JSON object keyed by domain");

  FixtureStore store;
  for (const auto& [domain, obj] : doc.items()) {
    if (!obj.is_object()) throw Error(ErrorCode::Io, "fixture " + domain + " is not an object");
    try {
      FixtureEntry entry;
      entry.dns = obj.value("dns", false);
      entry.created = date_field(obj, "created", domain);
      entry.expires = date_field(obj, "expires", domain);
      if (obj.contains("rank") && !obj["rank"].is_null()) entry.rank = obj["rank"].get<std::uint64_t>();
      if (obj.contains("redirects") && !obj["redirects"].is_null()) entry.redirects = obj["redirects"].get<int>();
      if (obj.contains("html") && !obj["html"].is_null()) {
        const auto path = base_dir / obj["html"].get<std::string>();
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(ErrorCode::Io, "fixture " + domain + ": cannot read " + path.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        entry.html = buf.str();
      }
      store.entries_.emplace(domain, std::move(entry));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Io, "fixture " + domain + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::Io, e.what());
    }
  }
  return store;
}

FixtureStore FixtureStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open fixtures file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.parent_path());
}

const FixtureEntry* FixtureStore::find(const std::string& domain) const {
  const auto it = entries_.find(domain);
  return it == entries_.end() ? nullptr : &it->second;
}

IntelProviderSuite make_fixture_suite(std::shared_ptr<const FixtureStore> store) {
  IntelProviderSuite suite;
  suite.mode = ProviderMode::Fixture;
  suite.dns = std::make_shared<FixtureDns>(store);
  suite.whois = std::make_shared<FixtureWhois>(store);
  suite.rank = std::make_shared<FixtureRank>(store);
  suite.content = std::make_shared<FixtureContent>(store);
  suite.knows_domain = [store](const std::string& domain) { return store->contains(domain); };
  return suite;
}

}  // namespace urlsentry

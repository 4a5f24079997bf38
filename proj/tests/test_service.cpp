#include <gtest/gtest.h>


#include <fstream>
#include <set>
#include <thread>

#include "support/synthetic.hpp"
#include "urlsentry/error.hpp"
#include "urlsentry/providers.hpp"
#include "urlsentry/service.hpp"

// After Eigen: <resolv.h> defines a _res macro that clashes with it.
#include <httplib.h>

using namespace urlsentry;
using nlohmann::json;

namespace {

std::shared_ptr<const TrainedModel> small_model() {
  static const auto model =
      std::make_shared<const TrainedModel>(train_decision_tree(to_matrix(synthetic::table(200, 3))));
  return model;
}

IntelProviderSuite fixture_suite() {
  return make_fixture_suite(
      std::make_shared<const FixtureStore>(FixtureStore::load(URLSENTRY_TEST_DATA "/acceptance/fixtures.json")));
}

std::filesystem::path fresh_log(const std::string& name) {
  const auto path = std::filesystem::temp_directory_path() / ("urlsentry_" + name + ".jsonl");
  std::filesystem::remove(path);
  return path;
}

ServiceConfig config_with(std::shared_ptr<const TrainedModel> model, const std::string& log_name) {
  ServiceConfig c;
  c.model = std::move(model);
  c.providers = fixture_suite();
  c.report_log = fresh_log(log_name);
  c.clock = [] { return Timestamp{std::chrono::sys_days{std::chrono::year{2024} / 5 / 1}}; };
  return c;
}

/// Runs listen() on a background thread for the lifetime of the fixture.
class Running {
 public:
  explicit Running(Service& s) : service_(s) {
    port_ = service_.bind("127.0.0.1", 0);
    thread_ = std::thread([this] { service_.listen(); });
    service_.wait_until_ready();
  }
  ~Running() {
    service_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(10, 0);
    return c;
  }
  int port() const { return port_; }

 private:
  Service& service_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST(Service, PredictValid) {
  Service s(config_with(small_model(), "predict"));
  const auto r = s.predict(R"({"url": "https://www.wikipedia.org/wiki/Phishing"})");
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["url"], "https://www.wikipedia.org/wiki/Phishing");
  EXPECT_TRUE(r.body["label"] == "phishing" || r.body["label"] == "legitimate");
  const double score = r.body["score"];
  EXPECT_TRUE(score >= 0 && score <= 1);
  EXPECT_EQ(r.body["label"] == "phishing", score >= 0.5);
  ASSERT_EQ(r.body["features"].size(), kFeatureCount);
  for (auto name : kFeatureNames) EXPECT_TRUE(r.body["features"].contains(std::string(name))) << name;
  EXPECT_EQ(r.body["model"], "decision_tree/features-v1");
  EXPECT_EQ(r.body["degraded"], false);
}

TEST(Service, PredictBadRequests) {
  Service s(config_with(small_model(), "predict_bad"));
  for (const char* body : {"", "not json", "[]", "{}", R"({"url": 7})", R"({"url": ""})", R"({"uri": "x"})"}) {
    const auto r = s.predict(body);
    EXPECT_EQ(r.status, 400) << body;
    EXPECT_EQ(r.body["error"], "missing url") << body;
  }
  EXPECT_EQ(s.predict(R"({"url": "http://a.com", "offline": "yes"})").status, 400);
}

TEST(Service, PredictUnparseable) {
  Service s(config_with(small_model(), "predict_422"));
  for (const char* body : {R"({"url": "http://"})", R"({"url": "   "})", R"({"url": "https:///path"})", R"({"url": "http://user@/x"})"}) {
    const auto r = s.predict(body);
    EXPECT_EQ(r.status, 422) << body << " " << r.body.dump();
    EXPECT_EQ(r.body["error"], "unparseable url");
  }
}

TEST(Service, PredictWithoutModel) {
  Service s(config_with(nullptr, "predict_503"));
  const auto r = s.predict(R"({"url": "http://example.com"})");
  EXPECT_EQ(r.status, 503);
  EXPECT_EQ(r.body["error"], "model not loaded");
  EXPECT_EQ(s.health().body["model_loaded"], false);
}

TEST(Service, OfflineUsesFixturesOrDefaults) {
  auto c = config_with(small_model(), "offline");
  // Live suite that fails everything: no providers configured.
  c.providers = IntelProviderSuite{};
  c.providers.timeout = std::chrono::milliseconds(200);
  Service without(c);
  const auto bare = without.predict(R"({"url": "https://www.wikipedia.org/wiki/Phishing", "offline": true})");
  ASSERT_EQ(bare.status, 200);
  EXPECT_EQ(bare.body["degraded"], true);
  EXPECT_EQ(bare.body["features"]["DNS_Record"], 1);
  EXPECT_EQ(bare.body["features"]["Web_Traffic"], 1);
  EXPECT_EQ(bare.body["features"]["Domain_Age"], 0);
  EXPECT_EQ(bare.body["features"]["Domain_End"], 0);

  c.fixtures = fixture_suite();
  Service with(c);
  const auto fixed = with.predict(R"({"url": "https://www.wikipedia.org/wiki/Phishing", "offline": true})");
  ASSERT_EQ(fixed.status, 200);
  EXPECT_EQ(fixed.body["degraded"], false);
  EXPECT_EQ(fixed.body["features"]["DNS_Record"], 0);
}

TEST(Service, ReportIdsIncrease) {
  const auto log = fresh_log("report_ids");
  auto c = config_with(small_model(), "report_ids");
  {
    Service s(c);
    const auto a = s.report(R"({"url": "http://bad.example/login", "comment": "fake bank"})");
    const auto b = s.report(R"({"url": "http://bad.example/2"})");
    ASSERT_EQ(a.status, 200);
    EXPECT_EQ(a.body["status"], "recorded");
    EXPECT_EQ(a.body["id"], 1);
    EXPECT_EQ(b.body["id"], 2);
    EXPECT_FALSE(a.body.contains("truncated"));
  }
  // A restarted service continues the sequence.
  Service again(c);
  EXPECT_EQ(again.report(R"({"url": "http://bad.example/3"})").body["id"], 3);

  std::ifstream in(log);
  std::string line;
  std::vector<json> lines;
  while (std::getline(in, line)) lines.push_back(json::parse(line));
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0]["url"], "http://bad.example/login");
  EXPECT_EQ(lines[0]["comment"], "fake bank");
  EXPECT_EQ(lines[0]["received_at"], "2024-05-01T00:00:00Z");
  EXPECT_EQ(lines[1]["comment"], "");
}

TEST(Service, ReportValidation) {
  Service s(config_with(small_model(), "report_bad"));
  for (const char* body : {"{}", R"({"url": "   "})", R"({"url": 3})", "oops"}) {
    EXPECT_EQ(s.report(body).status, 400) << body;
  }
  EXPECT_EQ(s.report(R"({"url": "http://x.com", "comment": 5})").status, 400);
}

TEST(Service, ReportTruncatesByCharacter) {
  const auto log = fresh_log("report_trunc");
  Service s(config_with(small_model(), "report_trunc"));
  std::string comment;
  for (int i = 0; i < 1030; ++i) comment += "\xc3\xa9";  // two-byte character
  const auto r = s.report(json{{"url", "http://x.com"}, {"comment", comment}}.dump());
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["truncated"], true);
  std::ifstream in(log);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(json::parse(line)["comment"].get<std::string>().size(), 2 * kMaxCommentChars);

  const auto exact = s.report(json{{"url", "http://x.com"}, {"comment", std::string(kMaxCommentChars, 'a')}}.dump());
  EXPECT_FALSE(exact.body.contains("truncated"));
}

TEST(Service, UnwritableLogIs507) {
  auto c = config_with(small_model(), "unwritable");
  c.report_log = std::filesystem::temp_directory_path();
  Service s(c);
  const auto r = s.report(R"({"url": "http://x.com"})");
  EXPECT_EQ(r.status, 507);
  EXPECT_EQ(r.body["error"], "report log unwritable");
}

TEST(Service, Health) {
  Service s(config_with(small_model(), "health"));
  const auto r = s.health();
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["status"], "ok");
  EXPECT_EQ(r.body["model_loaded"], true);
  EXPECT_EQ(r.body["mode"], "fixture");
}

TEST(Service, ListenAddress) {
  EXPECT_EQ(parse_listen_address("127.0.0.1:8080"), (std::pair<std::string, int>{"127.0.0.1", 8080}));
  EXPECT_EQ(parse_listen_address("[::1]:9000"), (std::pair<std::string, int>{"::1", 9000}));
  EXPECT_THROW(parse_listen_address("localhost"), Error);
  EXPECT_THROW(parse_listen_address("host:99999"), Error);
}

TEST(ServiceHttp, EndpointsOverHttp) {
  Service s(config_with(small_model(), "http"));
  Running running(s);
  EXPECT_GT(running.port(), 0);
  auto client = running.client();

  auto health = client.Get("/api/v1/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(health->get_header_value("Access-Control-Allow-Origin"), "*");

  auto pred = client.Post("/api/v1/predict", R"({"url": "http://bit.ly/abc"})", "application/json");
  ASSERT_TRUE(pred);
  EXPECT_EQ(pred->status, 200);
  EXPECT_EQ(json::parse(pred->body)["features"]["TinyURL"], 1);

  auto bad = client.Post("/api/v1/predict", "{", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);

  auto preflight = client.Options("/api/v1/predict");
  ASSERT_TRUE(preflight);
  EXPECT_EQ(preflight->status, 204);
}

TEST(ServiceHttp, ConcurrentReportsGetDistinctIds) {
  const auto log = fresh_log("hammer");
  Service s(config_with(small_model(), "hammer"));
  Running running(s);
  constexpr int kClients = 50;
  std::vector<std::thread> threads;
  std::vector<int> ids(kClients, -1);
  for (int i = 0; i < kClients; ++i) {
    threads.emplace_back([&, i] {
      auto client = running.client();
      const auto r = client.Post("/api/v1/report", json{{"url", "http://h" + std::to_string(i) + ".com"}}.dump(),
                                 "application/json");
      if (r && r->status == 200) ids[static_cast<std::size_t>(i)] = json::parse(r->body)["id"];
      else ADD_FAILURE() << "client " << i << ": " << (r ? std::to_string(r->status) : httplib::to_string(r.error()));
    });
  }
  for (auto& t : threads) t.join();
  std::set<int> distinct(ids.begin(), ids.end());
  EXPECT_EQ(distinct.size(), static_cast<std::size_t>(kClients));
  EXPECT_EQ(*distinct.begin(), 1);
  EXPECT_EQ(*distinct.rbegin(), kClients);

  std::ifstream in(log);
  std::string line;
  std::set<int> logged;
  while (std::getline(in, line)) logged.insert(json::parse(line)["id"].get<int>());
  EXPECT_EQ(logged, distinct);
}

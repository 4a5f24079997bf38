#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support/oracles.hpp"
#include "urlsentry/dataset.hpp"
#include "urlsentry/providers.hpp"

using namespace urlsentry;

namespace {

constexpr std::chrono::sys_days kNow{std::chrono::year{2024} / 5 / 1};

oracle::RuleInputs rule_inputs() {
  oracle::RuleInputs in;
  std::ifstream f(URLSENTRY_TEST_DATA "/acceptance/fixtures.json");
  in.fixtures = nlohmann::json::parse(f);
  in.fixtures_dir = URLSENTRY_TEST_DATA "/acceptance";
  in.shorteners = oracle::read_shorteners(URLSENTRY_SOURCE_DIR "/data/shorteners.txt");
  in.now = kNow;
  return in;
}

IntelProviderSuite suite() {
  return make_fixture_suite(
      std::make_shared<const FixtureStore>(FixtureStore::load(URLSENTRY_TEST_DATA "/acceptance/fixtures.json")));
}

std::string join(const std::array<int, 16>& row) {
  std::string s;
  for (int v : row) s += std::to_string(v) + ",";
  return s;
}

}  // namespace

TEST(FeatureOracle, TwentyFixtureUrls) {
  const auto expected = oracle::read_expected(URLSENTRY_TEST_DATA "/acceptance/expected.csv");
  ASSERT_EQ(expected.size(), 20u);
  const auto inputs = rule_inputs();
  const auto providers = suite();
  int phishing = 0;
  for (const auto& e : expected) {
    phishing += e.label;
    const auto [oracle_domain, oracle_row] = oracle::features_by_rules(e.url, inputs);
    EXPECT_EQ(oracle_domain, e.domain) << e.url;
    EXPECT_EQ(join(oracle_row), join(e.features)) << "oracle vs table: " << e.url;

    const auto got = extract_url_features(e.url, e.label, providers, kNow).vector;
    EXPECT_EQ(got.domain, e.domain) << e.url;
    EXPECT_EQ(join(got.features), join(e.features)) << "library vs table: " << e.url;
  }
  EXPECT_GT(phishing, 0);
  EXPECT_LT(phishing, 20);
}

TEST(FeatureOracle, GraphicriverRowReplay) {
  const auto got = extract_url_features("http://graphicriver.net/search?date=this-month&length_min=&length_max=&price_min=",
                                        0, suite(), kNow);
  FeatureTable table;
  table.rows.push_back(got.vector);
  std::ostringstream out;
  write_feature_csv(table, out);
  std::istringstream lines(out.str());
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(row, "graphicriver.net,0,0,1,1,0,0,0,0,0,1,1,1,0,0,1,0,0");
}

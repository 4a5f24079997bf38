#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "urlsentry/csv.hpp"
#include "urlsentry/dataset.hpp"
#include "urlsentry/error.hpp"
#include "urlsentry/providers.hpp"

using namespace urlsentry;

namespace {

const std::string kPhishHeader =
    "phish_id,url,phish_detail_url,submission_time,verified,verification_time,online,target\n";

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

std::vector<std::string> sorted_rows(const FeatureTable& t) {
  std::vector<std::string> out;
  for (const auto& r : t.rows) out.push_back(feature_csv_row(r));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> matrix_rows(const FeatureMatrix& m) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < m.x.rows(); ++i) {
    std::ostringstream s;
    for (Eigen::Index j = 0; j < m.x.cols(); ++j) s << m.x(i, j) << ',';
    s << m.labels(i);
    out.push_back(s.str());
  }
  return out;
}

Timestamp may_first() { return std::chrono::sys_days{std::chrono::year{2024} / 5 / 1}; }

}  // namespace

TEST(Csv, QuotedFieldsAndMultiline) {
  std::istringstream in("a,\"b,c\",\"d \"\"q\"\"\"\r\n\"multi\nline\",x\n");
  CsvReader reader(in);
  const auto r1 = reader.next_row();
  ASSERT_TRUE(r1);
  EXPECT_EQ(*r1, (std::vector<std::string>{"a", "b,c", "d \"q\""}));
  const auto r2 = reader.next_row();
  ASSERT_TRUE(r2);
  EXPECT_EQ(*r2, (std::vector<std::string>{"multi\nline", "x"}));
  EXPECT_FALSE(reader.next_row());
}

TEST(Csv, UnbalancedQuoteIsMalformed) {
  std::istringstream in("a,\"b\n");
  CsvReader reader(in);
  EXPECT_EQ(code_of([&] { reader.next_row(); }), ErrorCode::MalformedCsv);
}

TEST(Csv, FieldQuoting) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(PhishTank, ListingRowZero) {
  std::istringstream in(kPhishHeader +
                        "6557033,http://u1047531.cp.regruhosting.ru/acces-inges-2019,"
                        "http://www.phishtank.com/phish_detail.php?phish_id=6557033,"
                        "2020-05-09T22:01:43+00:00,yes,2020-05-09T22:03:07+00:00,yes,Other\n");
  const auto result = load_phishtank_csv(in);
  ASSERT_EQ(result.records.size(), 1u);
  EXPECT_EQ(result.records[0].url, "http://u1047531.cp.regruhosting.ru/acces-inges-2019");
  EXPECT_EQ(result.records[0].label, 1);
  EXPECT_EQ(result.records[0].source, UrlSource::PhishTank);
}

TEST(PhishTank, EmptyFileWithHeader) {
  std::istringstream in(kPhishHeader);
  EXPECT_TRUE(load_phishtank_csv(in).records.empty());
}

TEST(PhishTank, BlankUrlRowsAreSkipped) {
  std::istringstream in(kPhishHeader +
                        "1,http://a.com,d,t,yes,t,yes,x\n"
                        "2,,d,t,yes,t,yes,x\n"
                        "3,http://b.com,d,t,yes,t,yes,x\n"
                        "4,http://c.com,d,t,yes,t,yes,x\n");
  const auto result = load_phishtank_csv(in);
  EXPECT_EQ(result.records.size(), 3u);
  EXPECT_EQ(result.skipped, 1u);
}

TEST(PhishTank, WrongHeaderIsMalformed) {
  std::istringstream in("id,url\n1,http://a.com\n");
  EXPECT_EQ(code_of([&] { load_phishtank_csv(in); }), ErrorCode::MalformedCsv);
}

TEST(BenignList, BareLinesAndHeader) {
  std::istringstream bare("http://graphicriver.net/search?date=this-month\nhttp://a.com\nhttp://a.com\n");
  const auto r = load_benign_list(bare);
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.records[0].url, "http://graphicriver.net/search?date=this-month");
  EXPECT_EQ(r.records[0].label, 0);
  EXPECT_EQ(r.records[2].url, "http://a.com");  // duplicates preserved

  std::istringstream csv("url,source\nhttp://x.org,unb\nhttps://y.org/a,unb\n");
  EXPECT_EQ(load_benign_list(csv).records.size(), 2u);
}

TEST(BenignList, LineCountPreserved) {
  std::ostringstream text;
  for (int i = 0; i < 35300; ++i) text << "http://site" << i << ".example/\n";
  std::istringstream in(text.str());
  EXPECT_EQ(load_benign_list(in).records.size(), 35300u);
}

TEST(Dedupe, KeepsFirstOccurrence) {
  const auto out = dedupe({{"a", 0, UrlSource::Benign}, {"b", 0, UrlSource::Benign}, {"a", 0, UrlSource::Benign}});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].url, "a");
  EXPECT_EQ(out[1].url, "b");
}

TEST(SampleBalanced, ExactCountsAndClassOrder) {
  std::map<int, std::vector<UrlRecord>> by_class;
  for (int i = 0; i < 353; ++i) by_class[0].push_back({"b" + std::to_string(i), 0, UrlSource::Benign});
  for (int i = 0; i < 90; ++i) by_class[1].push_back({"p" + std::to_string(i), 1, UrlSource::PhishTank});
  const auto sample = sample_balanced(by_class, 50, 42);
  ASSERT_EQ(sample.size(), 100u);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(sample[i].label, i < 50 ? 0 : 1);
  std::set<std::string> unique;
  for (const auto& r : sample) unique.insert(r.url);
  EXPECT_EQ(unique.size(), 100u);
  EXPECT_EQ(sample_balanced(by_class, 50, 42).front().url, sample.front().url);
}

TEST(SampleBalanced, FullSetAndShortage) {
  std::map<int, std::vector<UrlRecord>> by_class{{0, {{"a", 0, {}}, {"b", 0, {}}}}, {1, {{"c", 1, {}}, {"d", 1, {}}}}};
  EXPECT_EQ(sample_balanced(by_class, 2, 1).size(), 4u);
  EXPECT_EQ(code_of([&] { sample_balanced(by_class, 3, 1); }), ErrorCode::InsufficientRecords);
}

TEST(BuildTable, OrderIndependentOfWorkers) {
  const auto expected = oracle::read_expected(URLSENTRY_TEST_DATA "/acceptance/expected.csv");
  std::vector<UrlRecord> records;
  for (const auto& e : expected) records.push_back({e.url, e.label, UrlSource::Benign});
  records.push_back({"   ", 0, UrlSource::Benign});  // skipped

  const auto store = std::make_shared<const FixtureStore>(FixtureStore::load(URLSENTRY_TEST_DATA "/acceptance/fixtures.json"));
  const auto suite = make_fixture_suite(store);
  std::size_t last_done = 0;
  BuildOptions serial;
  serial.workers = 1;
  BuildOptions parallel;
  parallel.workers = 4;
  parallel.progress = [&](std::size_t done, std::size_t) { last_done = done; };

  const auto a = build_feature_table(records, suite, may_first(), serial);
  const auto b = build_feature_table(records, suite, may_first(), parallel);
  ASSERT_EQ(a.rows.size(), expected.size());
  EXPECT_EQ(a, b);
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(a.rows[i].domain, expected[i].domain);
  EXPECT_EQ(last_done, records.size());
}

TEST(BuildTable, EmptyInput) {
  const auto table = build_feature_table({}, IntelProviderSuite{}, may_first());
  EXPECT_TRUE(table.rows.empty());
  std::ostringstream out;
  write_feature_csv(table, out);
  EXPECT_EQ(out.str(), std::string(kFeatureCsvHeader) + "\n");
}

TEST(Preprocess, SplitSizes) {
  const auto t = synthetic::table(10000, 1);
  const auto split = preprocess(t, {0.2, 42});
  EXPECT_EQ(split.train.rows(), 8000);
  EXPECT_EQ(split.test.rows(), 2000);
  EXPECT_EQ(split.train.x.cols(), 16);
  EXPECT_EQ(split.train.features, default_feature_names());
}

TEST(Preprocess, PermutationAndDeterminism) {
  const auto t = synthetic::table(10, 5);
  const auto a = preprocess(t, {0.2, 9});
  const auto b = preprocess(t, {0.2, 9});
  EXPECT_EQ(a.train_rows, b.train_rows);
  EXPECT_EQ(a.test_rows, b.test_rows);
  EXPECT_EQ(a.train.rows(), 8);
  EXPECT_EQ(a.test.rows(), 2);

  auto all = matrix_rows(a.train);
  const auto test = matrix_rows(a.test);
  all.insert(all.end(), test.begin(), test.end());
  auto original = matrix_rows(to_matrix(t));
  std::sort(all.begin(), all.end());
  std::sort(original.begin(), original.end());
  EXPECT_EQ(all, original);

  const auto other = preprocess(t, {0.2, 10});
  EXPECT_NE(other.train_rows, a.train_rows);
}

TEST(Preprocess, ValuesPassThroughAndRowIndicesMatch) {
  const auto t = synthetic::table(50, 2);
  const auto split = preprocess(t, {0.3, 4});
  for (std::size_t k = 0; k < split.train_rows.size(); ++k) {
    const auto& src = t.rows[split.train_rows[k]];
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      ASSERT_EQ(split.train.x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)), src.features[j]);
    }
    ASSERT_EQ(split.train.labels(static_cast<Eigen::Index>(k)), src.label);
  }
}

TEST(Preprocess, Errors) {
  EXPECT_EQ(code_of([] { preprocess(FeatureTable{}, {}); }), ErrorCode::EmptyTable);
  const auto t = synthetic::table(10, 1);
  EXPECT_EQ(code_of([&] { preprocess(t, {0.0, 1}); }), ErrorCode::ValueOutOfDomain);
  EXPECT_EQ(code_of([&] { preprocess(t, {1.0, 1}); }), ErrorCode::ValueOutOfDomain);
}

TEST(Preprocess, TestRowCount) {
  EXPECT_EQ(test_row_count(10000, 0.2), 2000u);
  EXPECT_EQ(test_row_count(10, 0.2), 2u);
  EXPECT_EQ(test_row_count(3, 0.01), 1u);
  EXPECT_EQ(test_row_count(3, 0.99), 2u);
}

TEST(Describe, ColumnStatistics) {
  const auto s = describe_column("x", {0, 0, 1, 1});
  EXPECT_EQ(s.count, 4u);
  EXPECT_DOUBLE_EQ(s.mean, 0.5);
  EXPECT_NEAR(s.std, std::sqrt(1.0 / 3.0), 1e-12);
  EXPECT_DOUBLE_EQ(s.q25, 0.0);
  EXPECT_DOUBLE_EQ(s.q50, 0.5);
  EXPECT_DOUBLE_EQ(s.q75, 1.0);

  const auto c = describe_column("c", {3, 3, 3});
  EXPECT_EQ(c.std, 0.0);
  EXPECT_EQ(c.min, c.max);

  const auto q = describe_column("q", {1, 2, 3, 4, 5});
  EXPECT_DOUBLE_EQ(q.q25, 2.0);
  EXPECT_DOUBLE_EQ(q.q75, 4.0);
}

TEST(Describe, BalancedLabelColumn) {
  FeatureTable t;
  for (int i = 0; i < 10000; ++i) {
    FeatureVector v;
    v.label = i % 2;
    t.rows.push_back(v);
  }
  const auto summary = describe_table(t);
  ASSERT_EQ(summary.size(), 17u);
  EXPECT_EQ(summary.back().name, "Label");
  EXPECT_EQ(summary.back().count, 10000u);
  EXPECT_DOUBLE_EQ(summary.back().mean, 0.5);
  EXPECT_THROW(describe_table(FeatureTable{}), Error);
}

TEST(FeatureCsv, RoundTrip) {
  const auto t = synthetic::table(3, 8);
  std::stringstream buf;
  write_feature_csv(t, buf);
  EXPECT_EQ(read_feature_csv(buf), t);
}

TEST(FeatureCsv, RowZeroSerialisation) {
  FeatureVector v;
  v.domain = "graphicriver.net";
  v.features = {0, 0, 1, 1, 0, 0, 0, 0, 0, 1, 1, 1, 0, 0, 1, 0};
  v.label = 0;
  EXPECT_EQ(feature_csv_row(v), "graphicriver.net,0,0,1,1,0,0,0,0,0,1,1,1,0,0,1,0,0");
}

TEST(FeatureCsv, SchemaErrors) {
  std::string header(kFeatureCsvHeader);
  const auto without_iframe = header.replace(header.find(",iFrame"), 7, "");
  std::istringstream missing(without_iframe + "\n");
  try {
    read_feature_csv(missing);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
    EXPECT_NE(std::string(e.what()).find("iFrame"), std::string::npos);
  }

  std::istringstream extra(std::string(kFeatureCsvHeader) + ",Extra\n");
  EXPECT_EQ(code_of([&] { read_feature_csv(extra); }), ErrorCode::SchemaMismatch);

  std::istringstream short_row(std::string(kFeatureCsvHeader) + "\na.com,0,0\n");
  EXPECT_EQ(code_of([&] { read_feature_csv(short_row); }), ErrorCode::SchemaMismatch);

  std::istringstream non_bit(std::string(kFeatureCsvHeader) + "\na.com,2,0,0,1,0,0,0,0,0,1,1,1,0,0,1,0,0\n");
  EXPECT_EQ(code_of([&] { read_feature_csv(non_bit); }), ErrorCode::ValueOutOfDomain);

  std::istringstream deep(std::string(kFeatureCsvHeader) + "\na.com,0,0,0,17,0,0,0,0,0,1,1,1,0,0,1,0,0\n");
  EXPECT_EQ(read_feature_csv(deep).rows.at(0).features[kUrlDepthColumn], 17);

  std::istringstream negative(std::string(kFeatureCsvHeader) + "\na.com,0,0,0,-1,0,0,0,0,0,1,1,1,0,0,1,0,0\n");
  EXPECT_EQ(code_of([&] { read_feature_csv(negative); }), ErrorCode::ValueOutOfDomain);
}

TEST(FeatureCsv, FileWriteUsesLf) {
  const auto path = std::filesystem::temp_directory_path() / "urlsentry_dataset_lf.csv";
  write_feature_csv(synthetic::table(4, 3), path);
  std::ifstream in(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(bytes.find('\r'), std::string::npos);
  EXPECT_EQ(std::count(bytes.begin(), bytes.end(), '\n'), 5);
  EXPECT_EQ(read_feature_csv(path).rows.size(), 4u);
  std::filesystem::remove(path);
}

TEST(Matrix, DropsDomainAndKeepsOrder) {
  const auto t = synthetic::table(5, 2);
  const auto m = to_matrix(t);
  EXPECT_EQ(m.x.rows(), 5);
  EXPECT_EQ(m.x.cols(), 16);
  EXPECT_TRUE(m.has_labels());
  EXPECT_EQ(sorted_rows(t).size(), 5u);
  EXPECT_EQ(to_row(t.rows[3]), m.x.row(3));
}

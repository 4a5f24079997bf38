#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "urlsentry/feature_matrix.hpp"
#include "urlsentry/net_intel.hpp"
#include "urlsentry/url_lexical.hpp"

namespace urlsentry {

enum class UrlSource { PhishTank, Benign, UserReport };

struct UrlRecord {
  std::string url;
  int label = 0;  // 0 legitimate, 1 phishing
  UrlSource source = UrlSource::Benign;
};

struct FeatureVector {
  std::string domain;
  std::array<int, kFeatureCount> features{};
  int label = 0;

  bool operator==(const FeatureVector&) const = default;
};

struct FeatureTable {
  std::vector<FeatureVector> rows;
  std::string schema_version{kSchemaVersion};

  bool operator==(const FeatureTable&) const = default;
};

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 42;
};

inline constexpr std::string_view kFeatureCsvHeader =
    "Domain,Have_IP,Have_At,URL_Length,URL_Depth,Redirection,https_Domain,TinyURL,Prefix/Suffix,"
    "DNS_Record,Web_Traffic,Domain_Age,Domain_End,iFrame,Mouse_Over,Right_Click,Web_Forwards,Label";

inline constexpr std::array<std::string_view, 8> kPhishTankHeader = {
    "phish_id", "url", "phish_detail_url", "submission_time", "verified", "verification_time", "online", "target"};

struct LoadResult {
  std::vector<UrlRecord> records;
  std::size_t skipped = 0;
};

// --- ingestion -------------------------------------------------------------

LoadResult load_phishtank_csv(const std::filesystem::path& path);
LoadResult load_phishtank_csv(std::istream& in);

/// Accepts a bare URL-per-line file or a CSV whose first column is the URL.
/// A first line whose first field does not look like a URL is treated as a
/// header and dropped.
LoadResult load_benign_list(const std::filesystem::path& path);
LoadResult load_benign_list(std::istream& in);

/// Drops repeated URLs, keeping the first occurrence.
std::vector<UrlRecord> dedupe(std::vector<UrlRecord> records);

/// Draws exactly per_class records from each class without replacement.
/// Output holds all class-0 records, then all class-1 records.
std::vector<UrlRecord> sample_balanced(const std::map<int, std::vector<UrlRecord>>& by_class,
                                       std::size_t per_class, std::uint64_t seed);

// --- feature extraction ----------------------------------------------------

FeatureVector assemble_vector(std::string domain, const LexicalFeatures& lexical,
                              const DomainFeatures& domain_features, const ContentFeatures& content,
                              int label);

struct UrlExtraction {
  FeatureVector vector;
  bool degraded = false;
};

/// Full per-URL pipeline: parse, lexical rules, provider lookups, derived
/// domain and content features. A missing fixture is treated as a domain on
/// which every lookup failed. Throws Error{EmptyUrl|MissingHost}.
UrlExtraction extract_url_features(const std::string& url, int label, const IntelProviderSuite& providers,
                                   Timestamp now, const ShortenerList& shorteners = bundled_shorteners());

struct BuildOptions {
  unsigned workers = 0;  // 0 = hardware concurrency
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Row order follows record order. Records with an empty or host-less URL
/// are skipped with a warning.
FeatureTable build_feature_table(const std::vector<UrlRecord>& records, const IntelProviderSuite& providers,
                                 Timestamp now, const BuildOptions& options = {});

// --- preprocessing ---------------------------------------------------------

/// Drops the Domain column.
FeatureMatrix to_matrix(const FeatureTable& table);
Eigen::RowVectorXd to_row(const FeatureVector& v);

struct Split {
  FeatureMatrix train;
  FeatureMatrix test;
  std::vector<std::size_t> train_rows;  // indices into the source table
  std::vector<std::size_t> test_rows;
};

std::size_t test_row_count(std::size_t rows, double test_fraction);

/// Fisher-Yates shuffle under the seed, then a contiguous train/test cut.
Split preprocess(const FeatureTable& table, const SplitSpec& spec);

struct ColumnSummary {
  std::string name;
  std::size_t count = 0;
  double mean = 0, std = 0, min = 0, q25 = 0, q50 = 0, q75 = 0, max = 0;
};

/// One summary per model column plus Label. Sample std (n-1), quantiles by
/// linear interpolation between order statistics.
std::vector<ColumnSummary> describe_table(const FeatureTable& table);
ColumnSummary describe_column(std::string name, std::vector<double> values);
void write_summary_csv(const std::vector<ColumnSummary>& summary, std::ostream& out);

// --- feature CSV -----------------------------------------------------------

FeatureTable read_feature_csv(const std::filesystem::path& path);
FeatureTable read_feature_csv(std::istream& in);
void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path);
void write_feature_csv(const FeatureTable& table, std::ostream& out);
std::string feature_csv_row(const FeatureVector& v);

}  // namespace urlsentry

#include "urlsentry/dataset.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "urlsentry/csv.hpp"
#include "urlsentry/error.hpp"
#include "urlsentry/rng.hpp"

namespace urlsentry {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

std::string_view strip_bom(std::string_view s) {
  if (s.starts_with("\xEF\xBB\xBF")) s.remove_prefix(3);
  return s;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

bool looks_like_url(std::string_view s) {
  return s.find("://") != std::string_view::npos || s.find('.') != std::string_view::npos;
}

}  // namespace

LoadResult load_phishtank_csv(std::istream& in) {
  CsvReader reader(in);
  auto header = reader.next_row();
  if (!header) throw Error(ErrorCode::MalformedCsv, "phishtank file is empty (no header)");
  if (!header->empty()) (*header)[0] = std::string(strip_bom((*header)[0]));
  bool header_ok = header->size() == kPhishTankHeader.size();
  for (std::size_t i = 0; header_ok && i < kPhishTankHeader.size(); ++i) {
    header_ok = trim((*header)[i]) == kPhishTankHeader[i];
  }
  if (!header_ok) throw Error(ErrorCode::MalformedCsv, "unexpected phishtank header");

  LoadResult result;
  while (auto row = reader.next_row()) {
    if (row->size() == 1 && trim((*row)[0]).empty()) continue;  // blank line
    if (row->size() != kPhishTankHeader.size() || trim((*row)[1]).empty()) {
      ++result.skipped;
      continue;
    }
    result.records.push_back({std::string(trim((*row)[1])), 1, UrlSource::PhishTank});
  }
  if (result.skipped > 0) spdlog::warn("phishtank: skipped {} rows without a usable url", result.skipped);
  return result;
}

LoadResult load_phishtank_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_phishtank_csv(in);
}

LoadResult load_benign_list(std::istream& in) {
  CsvReader reader(in);
  LoadResult result;
  bool first = true;
  while (auto row = reader.next_row()) {
    std::string_view url = trim(row->empty() ? std::string_view{} : std::string_view((*row)[0]));
    if (first) {
      url = strip_bom(url);
      first = false;
      if (!url.empty() && !looks_like_url(url)) continue;  // header
    }
    if (url.empty()) {
      ++result.skipped;
      continue;
    }
    result.records.push_back({std::string(url), 0, UrlSource::Benign});
  }
  return result;
}

LoadResult load_benign_list(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_benign_list(in);
}

std::vector<UrlRecord> dedupe(std::vector<UrlRecord> records) {
  std::unordered_set<std::string> seen;
  std::erase_if(records, [&](const UrlRecord& r) { return !seen.insert(r.url).second; });
  return records;
}

std::vector<UrlRecord> sample_balanced(const std::map<int, std::vector<UrlRecord>>& by_class,
                                       std::size_t per_class, std::uint64_t seed) {
  for (const auto& [label, records] : by_class) {
    if (records.size() < per_class) {
      throw Error(ErrorCode::InsufficientRecords,
                  "class " + std::to_string(label) + ": have " + std::to_string(records.size()) + ", need " +
                      std::to_string(per_class));
    }
  }
  Rng rng(seed);
  std::vector<UrlRecord> out;
  out.reserve(per_class * by_class.size());
  for (const auto& [label, records] : by_class) {
    std::vector<std::size_t> idx(records.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first per_class slots are the sample.
    for (std::size_t i = 0; i < per_class; ++i) {
      std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
      out.push_back(records[idx[i]]);
    }
  }
  return out;
}

FeatureVector assemble_vector(std::string domain, const LexicalFeatures& lx, const DomainFeatures& df,
                              const ContentFeatures& cf, int label) {
  FeatureVector v;
  v.domain = std::move(domain);
  v.features = {lx.have_ip,     lx.have_at,        lx.url_length,  lx.url_depth,  lx.redirection, lx.https_domain,
                lx.tiny_url,    lx.prefix_suffix,  df.dns_record,  df.web_traffic, df.domain_age,  df.domain_end,
                cf.iframe,      cf.mouse_over,     cf.right_click, cf.web_forwards};
  v.label = label;
  return v;
}

UrlExtraction extract_url_features(const std::string& url, int label, const IntelProviderSuite& providers,
                                   Timestamp now, const ShortenerList& shorteners) {
  const UrlParts parts = parse_url(url);
  const LexicalFeatures lexical = extract_lexical(parts, shorteners);

  DomainIntel intel;
  try {
    intel = gather_domain_intel(parts.domain, url, providers);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::FixtureMissing) throw;
    spdlog::debug("{}; using failure defaults", e.what());
    intel = unreachable_intel(now);
  }

  UrlExtraction out;
  out.degraded = intel.degraded;
  out.vector = assemble_vector(parts.domain, lexical, derive_domain_features(intel, now),
                               derive_content_features(intel.page_markup, intel.redirect_count), label);
  return out;
}

FeatureTable build_feature_table(const std::vector<UrlRecord>& records, const IntelProviderSuite& providers,
                                 Timestamp now, const BuildOptions& options) {
  const std::size_t total = records.size();
  std::vector<std::optional<FeatureVector>> slots(total);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;

  auto work = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      try {
        slots[i] = extract_url_features(records[i].url, records[i].label, providers, now).vector;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyUrl && e.code() != ErrorCode::MissingHost) throw;
        spdlog::warn("record {} skipped: {}", i, e.what());
      }
      const std::size_t finished = ++done;
      if (options.progress && (finished % 100 == 0 || finished == total)) {
        std::lock_guard lock(progress_mutex);
        options.progress(finished, total);
      }
    }
  };

  unsigned workers = options.workers != 0 ? options.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(total, 1)));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          work();
        } catch (...) {
          errors[w] = std::current_exception();
          next = total;
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  FeatureTable table;
  for (auto& slot : slots) {
    if (slot) table.rows.push_back(std::move(*slot));
  }
  return table;
}

Eigen::RowVectorXd to_row(const FeatureVector& v) {
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t j = 0; j < kFeatureCount; ++j) row(static_cast<Eigen::Index>(j)) = v.features[j];
  return row;
}

FeatureMatrix to_matrix(const FeatureTable& table) {
  FeatureMatrix m;
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  m.x.resize(n, static_cast<Eigen::Index>(kFeatureCount));
  m.labels.resize(n);
  m.features = default_feature_names();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    m.x.row(i) = to_row(row);
    m.labels(i) = row.label;
  }
  return m;
}

std::size_t test_row_count(std::size_t rows, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::ValueOutOfDomain, "test fraction must lie strictly between 0 and 1");
  }
  // The epsilon keeps products like 10 * 0.2 from rounding up to 3.
  auto n_test = static_cast<std::size_t>(std::ceil(static_cast<double>(rows) * test_fraction - 1e-9));
  if (rows >= 2) n_test = std::clamp<std::size_t>(n_test, 1, rows - 1);
  else n_test = 0;
  return n_test;
}

namespace {

FeatureMatrix gather_rows(const FeatureMatrix& all, const std::vector<std::size_t>& rows) {
  FeatureMatrix out;
  out.features = all.features;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), all.x.cols());
  out.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = all.x.row(static_cast<Eigen::Index>(rows[i]));
    out.labels(static_cast<Eigen::Index>(i)) = all.labels(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

}  // namespace

Split preprocess(const FeatureTable& table, const SplitSpec& spec) {
  if (table.rows.empty()) throw Error(ErrorCode::EmptyTable, "feature table is empty");
  const std::size_t n = table.rows.size();
  const std::size_t n_test = test_row_count(n, spec.test_fraction);

  Rng rng(spec.seed);
  const std::vector<std::size_t> order = rng.permutation(n);

  Split split;
  split.train_rows.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_test));
  split.test_rows.assign(order.end() - static_cast<std::ptrdiff_t>(n_test), order.end());
  const FeatureMatrix all = to_matrix(table);
  split.train = gather_rows(all, split.train_rows);
  split.test = gather_rows(all, split.test_rows);
  return split;
}

ColumnSummary describe_column(std::string name, std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyTable, "cannot describe an empty column");
  ColumnSummary s;
  s.name = std::move(name);
  s.count = values.size();
  const double n = static_cast<double>(values.size());
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / n;
  double ss = 0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = values.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;

  std::sort(values.begin(), values.end());
  const auto quantile = [&](double q) {
    const double pos = q * (n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (values[hi] - values[lo]) * (pos - static_cast<double>(lo));
  };
  s.min = values.front();
  s.max = values.back();
  s.q25 = quantile(0.25);
  s.q50 = quantile(0.50);
  s.q75 = quantile(0.75);
  return s;
}

std::vector<ColumnSummary> describe_table(const FeatureTable& table) {
  if (table.rows.empty()) throw Error(ErrorCode::EmptyTable, "feature table is empty");
  std::vector<ColumnSummary> out;
  std::vector<double> column(table.rows.size());
  for (std::size_t j = 0; j <= kFeatureCount; ++j) {
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      column[i] = j < kFeatureCount ? table.rows[i].features[j] : table.rows[i].label;
    }
    out.push_back(describe_column(j < kFeatureCount ? std::string(kFeatureNames[j]) : "Label", column));
  }
  return out;
}

void write_summary_csv(const std::vector<ColumnSummary>& summary, std::ostream& out) {
  out << "column,count,mean,std,min,25%,50%,75%,max\n";
  char buf[256];
  for (const auto& s : summary) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", s.count, s.mean, s.std, s.min, s.q25,
                  s.q50, s.q75, s.max);
    out << csv_field(s.name) << ',' << buf << '\n';
  }
}

std::string feature_csv_row(const FeatureVector& v) {
  std::string line = csv_field(v.domain);
  for (int f : v.features) {
    line.push_back(',');
    line += std::to_string(f);
  }
  line.push_back(',');
  line += std::to_string(v.label);
  return line;
}

void write_feature_csv(const FeatureTable& table, std::ostream& out) {
  out << kFeatureCsvHeader << '\n';
  for (const auto& row : table.rows) out << feature_csv_row(row) << '\n';
}

void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  write_feature_csv(table, out);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

namespace {

std::vector<std::string> expected_columns() {
  std::vector<std::string> cols;
  std::string_view header = kFeatureCsvHeader;
  std::size_t pos = 0;
  while (true) {
    const auto comma = header.find(',', pos);
    cols.emplace_back(header.substr(pos, comma == std::string_view::npos ? comma : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return cols;
}

int parse_cell(const std::string& text, const std::string& column, std::size_t line) {
  const auto cell = trim(text);
  int value = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    double d = 0;
    auto [dptr, dec] = std::from_chars(cell.data(), cell.data() + cell.size(), d);
    if (dec != std::errc() || dptr != cell.data() + cell.size() || d != std::floor(d)) {
      throw Error(ErrorCode::ValueOutOfDomain,
                  "line " + std::to_string(line) + ": '" + std::string(cell) + "' in " + column + " is not an integer");
    }
    value = static_cast<int>(d);
  }
  return value;
}

}  // namespace

FeatureTable read_feature_csv(std::istream& in) {
  static const std::vector<std::string> columns = expected_columns();
  CsvReader reader(in);
  auto header = reader.next_row();
  if (!header) throw Error(ErrorCode::SchemaMismatch, "feature file is empty (no header)");
  if (!header->empty()) (*header)[0] = std::string(strip_bom((*header)[0]));
  for (auto& h : *header) h = std::string(trim(h));

  if (*header != columns) {
    const std::set<std::string> have(header->begin(), header->end());
    const std::set<std::string> want(columns.begin(), columns.end());
    std::string missing, extra;
    for (const auto& c : want) {
      if (!have.contains(c)) missing += (missing.empty() ? "" : ", ") + c;
    }
    for (const auto& c : have) {
      if (!want.contains(c)) extra += (extra.empty() ? "" : ", ") + c;
    }
    std::string msg = "feature header mismatch;";
    if (!missing.empty()) msg += " missing: " + missing + ";";
    if (!extra.empty()) msg += " extra: " + extra + ";";
    if (missing.empty() && extra.empty()) msg += " columns out of order;";
    throw Error(ErrorCode::SchemaMismatch, msg);
  }

  FeatureTable table;
  while (auto row = reader.next_row()) {
    if (row->size() == 1 && trim((*row)[0]).empty()) continue;
    if (row->size() != columns.size()) {
      throw Error(ErrorCode::SchemaMismatch, "line " + std::to_string(reader.line()) + " has " +
                                                 std::to_string(row->size()) + " fields, expected " +
                                                 std::to_string(columns.size()));
    }
    FeatureVector v;
    v.domain = (*row)[0];
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      const int value = parse_cell((*row)[j + 1], columns[j + 1], reader.line());
      const bool ok = j == kUrlDepthColumn ? value >= 0 : (value == 0 || value == 1);
      if (!ok) {
        throw Error(ErrorCode::ValueOutOfDomain, "line " + std::to_string(reader.line()) + ": value " +
                                                     std::to_string(value) + " out of range for " + columns[j + 1]);
      }
      v.features[j] = value;
    }
    v.label = parse_cell(row->back(), "Label", reader.line());
    if (v.label != 0 && v.label != 1) {
      throw Error(ErrorCode::ValueOutOfDomain,
                  "line " + std::to_string(reader.line()) + ": label must be 0 or 1");
    }
    table.rows.push_back(std::move(v));
  }
  return table;
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_feature_csv(in);
}

}  // namespace urlsentry

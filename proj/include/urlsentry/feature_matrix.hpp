#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace urlsentry {

inline constexpr std::size_t kFeatureCount = 16;

/// Model input columns, in dataset order.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "Have_IP",    "Have_At",     "URL_Length", "URL_Depth",  "Redirection", "https_Domain",
    "TinyURL",    "Prefix/Suffix", "DNS_Record", "Web_Traffic", "Domain_Age", "Domain_End",
    "iFrame",     "Mouse_Over",  "Right_Click", "Web_Forwards"};

/// Index of the only non-binary column.
inline constexpr std::size_t kUrlDepthColumn = 3;

/// Identifies the column layout a model was trained against.
inline constexpr std::string_view kSchemaVersion = "features-v1";

/// Dense design matrix: one row per URL, one column per feature, with an
/// optional label vector aligned to the rows.
struct FeatureMatrix {
  Eigen::MatrixXd x;
  Eigen::VectorXi labels;  // empty when unlabeled
  std::vector<std::string> features;

  Eigen::Index rows() const noexcept { return x.rows(); }
  bool has_labels() const noexcept { return labels.size() == x.rows() && x.rows() > 0; }
};

inline std::vector<std::string> default_feature_names() {
  return {kFeatureNames.begin(), kFeatureNames.end()};
}

}  // namespace urlsentry

#pragma once

#include <filesystem>
#include <iosfwd>

#include "urlsentry/models/model.hpp"

namespace urlsentry {

/// Current on-disk format version of .pnmodel files.
inline constexpr int kModelFormatVersion = 1;

// Text format, one record per line:
//
//   urlsentry-model 1
//   kind random_forest
//   schema_version features-v1
//   trained_at 2024-05-01T00:00:00Z
//   features Have_IP Have_At ...
//   config <key> <value>          (one per hyperparameter)
//   ...kind-specific parameter records...
//   end
//
// Doubles are written in shortest round-trip form, so load(save(m)) scores
// every input exactly as m does.

void save_model(const TrainedModel& model, std::ostream& out);
void save_model(const TrainedModel& model, const std::filesystem::path& path);

/// Throws Error{VersionMismatch} for another format version and
/// Error{CorruptModel} for anything malformed, including an unknown kind.
TrainedModel load_model(std::istream& in);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace urlsentry

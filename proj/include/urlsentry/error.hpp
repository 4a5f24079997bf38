#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace urlsentry {

enum class ErrorCode {
  EmptyUrl,
  MissingHost,
  FixtureMissing,
  MalformedCsv,
  InsufficientRecords,
  EmptyTable,
  SchemaMismatch,
  ValueOutOfDomain,
  MissingLabels,
  NonFiniteLoss,
  UnsupportedKind,
  VersionMismatch,
  CorruptModel,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every recoverable failure in the library is reported through this type;
/// callers branch on code() rather than on the message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace urlsentry

#include "urlsentry/error.hpp"

namespace urlsentry {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyUrl: return "EmptyUrl";
    case ErrorCode::MissingHost: return "MissingHost";
    case ErrorCode::FixtureMissing: return "FixtureMissing";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::InsufficientRecords: return "InsufficientRecords";
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::ValueOutOfDomain: return "ValueOutOfDomain";
    case ErrorCode::MissingLabels: return "MissingLabels";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::UnsupportedKind: return "UnsupportedKind";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace urlsentry

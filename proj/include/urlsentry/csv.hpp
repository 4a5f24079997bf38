#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace urlsentry {

/// RFC 4180 reader: quoted fields may hold commas, doubled quotes and line
/// breaks. Throws Error{MalformedCsv} on an unterminated quoted field.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  std::optional<std::vector<std::string>> next_row();
  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

std::string csv_field(std::string_view value);

}  // namespace urlsentry

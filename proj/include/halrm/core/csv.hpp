#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace halrm::csv {

using Row = std::vector<std::string>;

// RFC 4180 reader. Quoted fields may contain separators, doubled quotes and
// line breaks. A trailing CR before LF is dropped.
class Reader {
 public:
  explicit Reader(std::istream& in, char separator = ',') : in_(in), sep_(separator) {}

  // Returns std::nullopt at end of input.
  std::optional<Row> next();

  // Physical line on which the last returned record started (1-based).
  std::size_t line() const noexcept { return record_line_; }

 private:
  std::istream& in_;
  char sep_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

// Quotes a field only when it needs it.
std::string quote(std::string_view field, char separator = ',');

void write_row(std::ostream& out, const Row& row, char separator = ',');

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

}  // namespace halrm::csv

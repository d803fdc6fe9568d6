#include "halrm/core/csv.hpp"

#include <charconv>

#include "halrm/core/errors.hpp"

namespace halrm::csv {

std::optional<Row> Reader::next() {
  Row row;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  bool was_quoted = false;
  record_line_ = line_;

  int ch;
  while ((ch = in_.get()) != std::char_traits<char>::eof()) {
    any = true;
    char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty() && !was_quoted) {
      in_quotes = true;
      was_quoted = true;
    } else if (c == sep_) {
      row.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '\r' && in_.peek() == '\n') {
      // folded into the LF branch
    } else if (c == '\n') {
      ++line_;
      row.push_back(std::move(field));
      return row;
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) {
    throw DataError("unterminated quoted field starting on line " + std::to_string(record_line_));
  }
  if (!any) return std::nullopt;
  row.push_back(std::move(field));
  return row;
}

std::string quote(std::string_view field, char separator) {
  bool needs = field.find_first_of(std::string{'"', '\n', '\r', separator}) != std::string::npos;
  if (!needs) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const Row& row, char separator) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << separator;
    out << quote(row[i], separator);
  }
  out << "\r\n";
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace halrm::csv

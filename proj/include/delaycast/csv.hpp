#ifndef DELAYCAST_CSV_HPP
#define DELAYCAST_CSV_HPP

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace delaycast {

/// Streaming RFC-4180 reader: comma separated, double-quote quoting with ""
/// escapes, quoted fields may span lines, CRLF or LF line ends.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Reads the next record into `fields`. Returns false at end of input.
  bool next(std::vector<std::string>& fields);
  /// 1-based physical line on which the last record started.
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);
/// Fixed-point text with `decimals` places.
std::string format_fixed(double value, int decimals);

}  // namespace delaycast

#endif  // DELAYCAST_CSV_HPP

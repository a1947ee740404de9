#include "delaycast/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <streambuf>

namespace delaycast {

bool CsvReader::next(std::vector<std::string>& fields) {
  fields.clear();
  std::streambuf* buf = in_.rdbuf();
  using Traits = std::streambuf::traits_type;

  int c = buf->sgetc();
  if (c == Traits::eof()) return false;
  record_line_ = line_;

  std::string field;
  bool quoted = false;
  bool after_quote = false;
  while (true) {
    c = buf->sbumpc();
    if (c == Traits::eof()) {
      fields.push_back(std::move(field));
      return true;
    }
    const char ch = Traits::to_char_type(c);
    if (quoted) {
      if (ch == '"') {
        if (buf->sgetc() == '"') {
          buf->sbumpc();
          field.push_back('"');
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        if (ch == '\n') ++line_;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      after_quote = false;
    } else if (ch == '\r' || ch == '\n') {
      if (ch == '\r' && buf->sgetc() == '\n') buf->sbumpc();
      ++line_;
      fields.push_back(std::move(field));
      return true;
    } else if (ch == '"' && field.empty() && !after_quote) {
      quoted = true;
    } else {
      field.push_back(ch);
    }
  }
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << '\n';
}

std::string format_double(double value) {
  if (value == 0.0) return "0";  // folds -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string format_fixed(double value, int decimals) {
  if (std::abs(value) < 0.5 * std::pow(10.0, -decimals)) value = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

}  // namespace delaycast

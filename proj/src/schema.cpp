#include "delaycast/schema.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "delaycast/csv.hpp"
#include "delaycast/error.hpp"

namespace delaycast {

namespace {

constexpr std::array<std::string_view, kColumnCount> kColumnNames = {
    "FL_DATE",          "AIRLINE",           "AIRLINE_DOT",
    "AIRLINE_CODE",     "DOT_CODE",          "FL_NUMBER",
    "ORIGIN",           "ORIGIN_CITY",       "DEST",
    "DEST_CITY",        "CRS_DEP_TIME",      "DEP_TIME",
    "DEP_DELAY",        "TAXI_OUT",          "WHEELS_OFF",
    "WHEELS_ON",        "TAXI_IN",           "CRS_ARR_TIME",
    "ARR_TIME",         "ARR_DELAY",         "CANCELLED",
    "CANCELLATION_CODE", "DIVERTED",         "CRS_ELAPSED_TIME",
    "ELAPSED_TIME",     "AIR_TIME",          "DISTANCE",
    "DELAY_DUE_CARRIER", "DELAY_DUE_WEATHER", "DELAY_DUE_NAS",
    "DELAY_DUE_SECURITY", "DELAY_DUE_LATE_AIRCRAFT"};

constexpr std::array<Column, 6> kMandatory = {
    Column::FlDate,    Column::Airline,   Column::Origin,
    Column::Dest,      Column::Cancelled, Column::Diverted};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool is_absent(std::string_view s) { return s.empty() || s == "NA"; }

double parse_number(std::string_view s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    throw ParseError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

int parse_int(std::string_view s) {
  const double v = parse_number(s);
  if (v != std::floor(v) || std::abs(v) > 2147483647.0) {
    throw ParseError("not an integer: '" + std::string(s) + "'");
  }
  return static_cast<int>(v);
}

bool parse_flag(std::string_view s) {
  const double v = parse_number(s);
  if (v == 0.0) return false;
  if (v == 1.0) return true;
  throw ParseError("flag must be 0 or 1, got '" + std::string(s) + "'");
}

// Exports write clocks as "5", "0005", "1155" or "1155.0"; normalize to the
// strict 3/4 digit form before parsing.
ClockMinutes parse_clock_cell(std::string_view s) {
  std::string_view digits = s;
  if (auto dot = digits.find('.'); dot != std::string_view::npos) {
    std::string_view frac = digits.substr(dot + 1);
    if (frac.empty() || frac.find_first_not_of('0') != std::string_view::npos) {
      throw ParseError("bad clock value '" + std::string(s) + "'");
    }
    digits = digits.substr(0, dot);
  }
  if (digits.empty() || digits.size() > 4 ||
      digits.find_first_not_of("0123456789") != std::string_view::npos) {
    throw ParseError("bad clock value '" + std::string(s) + "'");
  }
  std::string padded(4 - digits.size(), '0');
  padded += digits;
  return parse_hhmm(padded);
}

template <typename T, typename Fn>
void set_optional(std::optional<T>& field, std::string_view cell, Fn parse) {
  if (is_absent(cell)) {
    field.reset();
  } else {
    field = parse(cell);
  }
}

void parse_cell(Column c, std::string_view cell, FlightRecord& r) {
  auto require = [&]() {
    if (is_absent(cell)) throw ParseError("missing value");
  };
  auto number = [](std::string_view s) { return parse_number(s); };
  switch (c) {
    case Column::FlDate: require(); r.fl_date = parse_date(cell); break;
    case Column::Airline: require(); r.airline = std::string(cell); break;
    case Column::AirlineDot: r.airline_dot = std::string(cell); break;
    case Column::AirlineCode: r.airline_code = std::string(cell); break;
    case Column::DotCode: r.dot_code = std::string(cell); break;
    case Column::FlNumber: require(); r.fl_number = parse_int(cell); break;
    case Column::Origin: require(); r.origin = std::string(cell); break;
    case Column::OriginCity: r.origin_city = std::string(cell); break;
    case Column::Dest: require(); r.dest = std::string(cell); break;
    case Column::DestCity: r.dest_city = std::string(cell); break;
    case Column::CrsDepTime: set_optional(r.crs_dep_time, cell, parse_clock_cell); break;
    case Column::DepTime: set_optional(r.dep_time, cell, parse_clock_cell); break;
    case Column::DepDelay: set_optional(r.dep_delay, cell, number); break;
    case Column::TaxiOut: set_optional(r.taxi_out, cell, number); break;
    case Column::WheelsOff: set_optional(r.wheels_off, cell, parse_clock_cell); break;
    case Column::WheelsOn: set_optional(r.wheels_on, cell, parse_clock_cell); break;
    case Column::TaxiIn: set_optional(r.taxi_in, cell, number); break;
    case Column::CrsArrTime: set_optional(r.crs_arr_time, cell, parse_clock_cell); break;
    case Column::ArrTime: set_optional(r.arr_time, cell, parse_clock_cell); break;
    case Column::ArrDelay: set_optional(r.arr_delay, cell, number); break;
    case Column::Cancelled: require(); r.cancelled = parse_flag(cell); break;
    case Column::CancellationCode:
      set_optional(r.cancellation_code, cell,
                   [](std::string_view s) { return std::string(s); });
      break;
    case Column::Diverted: require(); r.diverted = parse_flag(cell); break;
    case Column::CrsElapsedTime: set_optional(r.crs_elapsed_time, cell, number); break;
    case Column::ElapsedTime: set_optional(r.elapsed_time, cell, number); break;
    case Column::AirTime: set_optional(r.air_time, cell, number); break;
    case Column::Distance: require(); r.distance = parse_number(cell); break;
    case Column::DelayDueCarrier:
    case Column::DelayDueWeather:
    case Column::DelayDueNas:
    case Column::DelayDueSecurity:
    case Column::DelayDueLateAircraft: {
      auto idx = static_cast<std::size_t>(c) -
                 static_cast<std::size_t>(Column::DelayDueCarrier);
      set_optional(r.components[idx], cell, number);
      if (r.components[idx] && *r.components[idx] < 0) {
        throw ParseError("component delay must be >= 0, got '" +
                         std::string(cell) + "'");
      }
      break;
    }
  }
}

template <typename T, typename Fn>
std::string format_optional(const std::optional<T>& v, Fn fmt) {
  return v ? fmt(*v) : std::string();
}

std::string format_cell(Column c, const FlightRecord& r) {
  auto number = [](double v) { return format_double(v); };
  switch (c) {
    case Column::FlDate: return format_date(r.fl_date);
    case Column::Airline: return r.airline;
    case Column::AirlineDot: return r.airline_dot;
    case Column::AirlineCode: return r.airline_code;
    case Column::DotCode: return r.dot_code;
    case Column::FlNumber: return std::to_string(r.fl_number);
    case Column::Origin: return r.origin;
    case Column::OriginCity: return r.origin_city;
    case Column::Dest: return r.dest;
    case Column::DestCity: return r.dest_city;
    case Column::CrsDepTime: return format_optional(r.crs_dep_time, format_hhmm);
    case Column::DepTime: return format_optional(r.dep_time, format_hhmm);
    case Column::DepDelay: return format_optional(r.dep_delay, number);
    case Column::TaxiOut: return format_optional(r.taxi_out, number);
    case Column::WheelsOff: return format_optional(r.wheels_off, format_hhmm);
    case Column::WheelsOn: return format_optional(r.wheels_on, format_hhmm);
    case Column::TaxiIn: return format_optional(r.taxi_in, number);
    case Column::CrsArrTime: return format_optional(r.crs_arr_time, format_hhmm);
    case Column::ArrTime: return format_optional(r.arr_time, format_hhmm);
    case Column::ArrDelay: return format_optional(r.arr_delay, number);
    case Column::Cancelled: return r.cancelled ? "1" : "0";
    case Column::CancellationCode: return r.cancellation_code.value_or("");
    case Column::Diverted: return r.diverted ? "1" : "0";
    case Column::CrsElapsedTime: return format_optional(r.crs_elapsed_time, number);
    case Column::ElapsedTime: return format_optional(r.elapsed_time, number);
    case Column::AirTime: return format_optional(r.air_time, number);
    case Column::Distance: return number(r.distance);
    default: {
      auto idx = static_cast<std::size_t>(c) -
                 static_cast<std::size_t>(Column::DelayDueCarrier);
      return format_optional(r.components[idx], number);
    }
  }
}

}  // namespace

ClockMinutes parse_hhmm(std::string_view raw) {
  if ((raw.size() != 3 && raw.size() != 4) ||
      raw.find_first_not_of("0123456789") != std::string_view::npos) {
    throw ParseError("malformed hhmm clock value '" + std::string(raw) + "'");
  }
  const int value = std::stoi(std::string(raw));
  const int hh = value / 100;
  const int mm = value % 100;
  if (mm > 59 || hh > 24 || (hh == 24 && mm != 0)) {
    throw ParseError("hhmm clock value out of range '" + std::string(raw) + "'");
  }
  return ClockMinutes{hh * 60 + mm};
}

std::string format_hhmm(ClockMinutes m) {
  if (m.value < 0 || m.value > 1440) {
    throw ParseError("clock minutes out of range: " + std::to_string(m.value));
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%02d%02d", m.value / 60, m.value % 60);
  return buf;
}

Date parse_date(std::string_view raw) {
  auto bad = [&]() {
    return ParseError("date must be YYYY-MM-DD, got '" + std::string(raw) + "'");
  };
  if (raw.size() != 10 || raw[4] != '-' || raw[7] != '-') throw bad();
  auto field = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    auto res = std::from_chars(raw.data() + pos, raw.data() + pos + len, v);
    if (res.ec != std::errc() || res.ptr != raw.data() + pos + len) throw bad();
    return v;
  };
  const Date d{std::chrono::year{field(0, 4)},
               std::chrono::month{static_cast<unsigned>(field(5, 2))},
               std::chrono::day{static_cast<unsigned>(field(8, 2))}};
  if (!d.ok()) throw ParseError("invalid calendar date '" + std::string(raw) + "'");
  return d;
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

std::string_view component_column(Component c) {
  return column_name(static_cast<Column>(
      static_cast<int>(Column::DelayDueCarrier) + static_cast<int>(c)));
}

std::string_view component_label(Component c) {
  static constexpr std::array<std::string_view, kComponentCount> labels = {
      "Carrier", "Weather", "NAS", "Security", "Late Aircraft"};
  return labels[static_cast<std::size_t>(c)];
}

bool FlightRecord::has_all_components() const {
  return std::all_of(components.begin(), components.end(),
                     [](const auto& c) { return c.has_value(); });
}

bool FlightRecord::has_no_components() const {
  return std::none_of(components.begin(), components.end(),
                      [](const auto& c) { return c.has_value(); });
}

double FlightRecord::component_sum() const {
  double s = 0.0;
  for (const auto& c : components) s += c.value();
  return s;
}

std::optional<std::string> check_record(const FlightRecord& r) {
  if (!r.fl_date.ok()) return "invalid FL_DATE";
  for (const auto* clock : {&r.crs_dep_time, &r.dep_time, &r.wheels_off,
                            &r.wheels_on, &r.crs_arr_time, &r.arr_time}) {
    if (*clock && ((*clock)->value < 0 || (*clock)->value > 1440)) {
      return "clock value outside [0,1440]";
    }
  }
  for (std::size_t i = 0; i < kComponentCount; ++i) {
    if (r.components[i] && !(*r.components[i] >= 0)) {
      return std::string(component_column(static_cast<Component>(i))) +
             " must be >= 0";
    }
  }
  return std::nullopt;
}

std::string_view column_name(Column c) {
  return kColumnNames[static_cast<std::size_t>(c)];
}

std::span<const Column> mandatory_columns() { return kMandatory; }

HeaderMap default_header_map() {
  HeaderMap map;
  for (std::size_t i = 0; i < kColumnCount; ++i) {
    map.emplace(std::string(kColumnNames[i]), static_cast<Column>(i));
  }
  return map;
}

std::string Diagnostic::to_string() const {
  return "row=" + std::to_string(row) + " col=" + column + " err=" + message;
}

CsvReadResult read_csv(std::istream& in, const HeaderMap& header_map) {
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) throw SchemaError("CSV input is empty; header row required");
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) {
    header[0].erase(0, 3);  // UTF-8 BOM
  }

  // Position of each known column in the input; unknown columns are ignored.
  std::vector<std::pair<std::size_t, Column>> layout;
  std::array<bool, kColumnCount> seen{};
  for (std::size_t i = 0; i < header.size(); ++i) {
    auto it = header_map.find(std::string(trim(header[i])));
    if (it == header_map.end()) continue;
    const auto idx = static_cast<std::size_t>(it->second);
    if (seen[idx]) throw SchemaError("duplicate header column " + header[i]);
    seen[idx] = true;
    layout.emplace_back(i, it->second);
  }
  std::string missing;
  for (Column c : kMandatory) {
    if (!seen[static_cast<std::size_t>(c)]) {
      if (!missing.empty()) missing += ",";
      missing += column_name(c);
    }
  }
  if (!missing.empty()) throw SchemaError("missing mandatory columns: " + missing);

  CsvReadResult result;
  std::vector<std::string> fields;
  std::size_t row = 0;
  while (reader.next(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    ++row;
    if (fields.size() != header.size()) {
      result.diagnostics.push_back(
          {row, "*",
           "expected " + std::to_string(header.size()) + " fields, got " +
               std::to_string(fields.size())});
      continue;
    }
    FlightRecord rec;
    bool ok = true;
    for (const auto& [pos, col] : layout) {
      try {
        parse_cell(col, trim(fields[pos]), rec);
      } catch (const ParseError& e) {
        result.diagnostics.push_back({row, std::string(column_name(col)), e.what()});
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    if (auto violation = check_record(rec)) {
      result.diagnostics.push_back({row, "*", *violation});
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

CsvReadResult read_csv_file(const std::string& path, const HeaderMap& header_map) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path);
  return read_csv(in, header_map);
}

std::size_t write_csv(std::span<const FlightRecord> records, std::ostream& out) {
  std::vector<std::string> fields(kColumnNames.begin(), kColumnNames.end());
  write_csv_row(out, fields);
  for (const auto& r : records) {
    for (std::size_t i = 0; i < kColumnCount; ++i) {
      fields[i] = format_cell(static_cast<Column>(i), r);
    }
    write_csv_row(out, fields);
  }
  if (!out) throw Error("io", "write failure on CSV sink");
  return records.size();
}

std::size_t write_csv_file(std::span<const FlightRecord> records,
                           const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot open " + path + " for writing");
  const auto n = write_csv(records, out);
  out.flush();
  if (!out) throw Error("io", "write failure on " + path);
  return n;
}

}  // namespace delaycast

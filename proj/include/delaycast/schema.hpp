#ifndef DELAYCAST_SCHEMA_HPP
#define DELAYCAST_SCHEMA_HPP

#include <array>
#include <chrono>
#include <compare>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace delaycast {

/// Minutes past local midnight, in [0, 1440]. 1440 is the end-of-day value
/// some files write as "2400".
struct ClockMinutes {
  int value = 0;
  auto operator<=>(const ClockMinutes&) const = default;
};

/// Parses a strict 3- or 4-digit hhmm clock string.
ClockMinutes parse_hhmm(std::string_view raw);
/// Inverse of parse_hhmm, always four digits. 1440 formats as "2400".
std::string format_hhmm(ClockMinutes m);

using Date = std::chrono::year_month_day;

/// Parses an ISO YYYY-MM-DD calendar date.
Date parse_date(std::string_view raw);
std::string format_date(const Date& d);

/// Index of each delay component inside FlightRecord::components and the
/// component target columns.
enum class Component : int { Carrier = 0, Weather, Nas, Security, LateAircraft };
inline constexpr std::size_t kComponentCount = 5;
std::string_view component_column(Component c);
std::string_view component_label(Component c);

/// One on-time performance row.
struct FlightRecord {
  Date fl_date{};
  std::string airline;
  std::string airline_dot;
  std::string airline_code;
  std::string dot_code;
  int fl_number = 0;
  std::string origin;
  std::string origin_city;
  std::string dest;
  std::string dest_city;
  std::optional<ClockMinutes> crs_dep_time;
  std::optional<ClockMinutes> dep_time;
  std::optional<double> dep_delay;
  std::optional<double> taxi_out;
  std::optional<ClockMinutes> wheels_off;
  std::optional<ClockMinutes> wheels_on;
  std::optional<double> taxi_in;
  std::optional<ClockMinutes> crs_arr_time;
  std::optional<ClockMinutes> arr_time;
  std::optional<double> arr_delay;
  bool cancelled = false;
  std::optional<std::string> cancellation_code;
  bool diverted = false;
  std::optional<double> crs_elapsed_time;
  std::optional<double> elapsed_time;
  std::optional<double> air_time;
  double distance = 0.0;
  std::array<std::optional<double>, kComponentCount> components{};

  bool has_all_components() const;
  bool has_no_components() const;
  double component_sum() const;  // requires has_all_components()

  bool operator==(const FlightRecord&) const = default;
};

/// Returns a description of the first violated record invariant, if any.
std::optional<std::string> check_record(const FlightRecord& r);

/// Columns in output order.
enum class Column : int {
  FlDate = 0, Airline, AirlineDot, AirlineCode, DotCode, FlNumber, Origin,
  OriginCity, Dest, DestCity, CrsDepTime, DepTime, DepDelay, TaxiOut,
  WheelsOff, WheelsOn, TaxiIn, CrsArrTime, ArrTime, ArrDelay, Cancelled,
  CancellationCode, Diverted, CrsElapsedTime, ElapsedTime, AirTime, Distance,
  DelayDueCarrier, DelayDueWeather, DelayDueNas, DelayDueSecurity,
  DelayDueLateAircraft
};
inline constexpr std::size_t kColumnCount = 32;

std::string_view column_name(Column c);
std::span<const Column> mandatory_columns();

/// Header name to field mapping. The default maps the canonical upper-case
/// names; callers may add aliases.
using HeaderMap = std::map<std::string, Column, std::less<>>;
HeaderMap default_header_map();

struct Diagnostic {
  std::size_t row = 0;  // 1-based data row, header excluded
  std::string column;
  std::string message;
  std::string to_string() const;
};

struct CsvReadResult {
  std::vector<FlightRecord> records;
  std::vector<Diagnostic> diagnostics;
};

/// Reads records from a header-driven CSV stream. Bad rows are skipped and
/// reported; missing mandatory header columns throw SchemaError.
CsvReadResult read_csv(std::istream& in,
                       const HeaderMap& header_map = default_header_map());
CsvReadResult read_csv_file(const std::string& path,
                            const HeaderMap& header_map = default_header_map());

/// Writes header plus one row per record in canonical column order.
std::size_t write_csv(std::span<const FlightRecord> records, std::ostream& out);
std::size_t write_csv_file(std::span<const FlightRecord> records,
                           const std::string& path);

}  // namespace delaycast

#endif  // DELAYCAST_SCHEMA_HPP

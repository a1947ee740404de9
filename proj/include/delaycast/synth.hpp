#ifndef DELAYCAST_SYNTH_HPP
#define DELAYCAST_SYNTH_HPP

#include <array>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "delaycast/schema.hpp"

namespace delaycast {

enum class RowLabel { Clean, Cancelled, Missing, Mismatch, Outlier };
std::string_view to_string(RowLabel label);
RowLabel parse_row_label(std::string_view s);

/// Zero-inflated delay process: zero with probability `zero_prob`,
/// otherwise mean * (floor + (1 - floor) * Exp(1)).
struct ComponentProcess {
  double zero_prob = 0.5;
  double scale = 10.0;
  double floor = 0.5;
};

struct SynthConfig {
  std::size_t count = 1000;
  std::uint64_t seed = 0;
  Date start_date{std::chrono::year{2023}, std::chrono::month{1}, std::chrono::day{1}};
  int days = 90;
  int airlines = 8;
  int airports = 12;

  // label rates, drawn per row as one categorical
  double cancel_rate = 0.0;    // cancelled or diverted
  double missing_rate = 0.0;   // component group absent
  double mismatch_rate = 0.0;  // components do not sum to ARR_DELAY
  double outlier_rate = 0.0;   // total beyond the IQR upper bound
  double outlier_magnitude = 60.0;
  double diverted_share = 0.15;  // of cancel_rate rows

  // carrier couples to airline, weather to month, NAS to hour of day,
  // late-aircraft to the mean taxi-out of up to `lag_rows` earlier clean
  // rows of the same day.
  ComponentProcess carrier{0.45, 20.0, 0.5};
  ComponentProcess weather{0.85, 25.0, 0.5};
  ComponentProcess nas{0.40, 15.0, 0.5};
  ComponentProcess security{0.97, 8.0, 0.5};
  ComponentProcess late_aircraft{0.30, 2.0, 0.6};
  int lag_rows = 3;

  /// Throws DataError on out-of-range settings.
  void validate() const;
  nlohmann::json to_json() const;
};

struct SynthResult {
  std::vector<FlightRecord> records;
  std::vector<RowLabel> labels;
  /// Rows per label, indexed by RowLabel.
  std::array<std::size_t, 5> counts{};
  /// Upper IQR bound the outliers were placed beyond.
  double iqr_upper = 0.0;

  std::size_t count(RowLabel l) const { return counts[static_cast<std::size_t>(l)]; }
};

/// Deterministic generator: same config, same output.
SynthResult generate(const SynthConfig& config);

/// `row,label` with 1-based data rows.
void write_labels(std::span<const RowLabel> labels, std::ostream& out);
std::vector<RowLabel> read_labels(std::istream& in);

}  // namespace delaycast

#endif  // DELAYCAST_SYNTH_HPP

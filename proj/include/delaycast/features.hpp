#ifndef DELAYCAST_FEATURES_HPP
#define DELAYCAST_FEATURES_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "delaycast/numerics.hpp"
#include "delaycast/schema.hpp"

namespace delaycast {

enum class TargetMode { Components, Total };
std::string_view to_string(TargetMode mode);
TargetMode parse_target_mode(std::string_view s);

inline constexpr std::size_t kFeatureCount = 11;
/// Fixed feature order of every table.
const std::array<std::string, kFeatureCount>& feature_names();
std::vector<std::string> target_names(TargetMode mode);

/// Feature column indices.
namespace feature {
inline constexpr int kCrsDepTime = 0;
inline constexpr int kTaxiOut = 1;
inline constexpr int kCrsArrTime = 2;
inline constexpr int kTaxiIn = 3;
inline constexpr int kDistance = 4;
inline constexpr int kYear = 5;
inline constexpr int kMonth = 6;
inline constexpr int kDay = 7;
inline constexpr int kAirline = 8;
inline constexpr int kOrigin = 9;
inline constexpr int kDest = 10;
}  // namespace feature

/// Continuous (minute and mile) columns of the feature matrix.
std::vector<int> continuous_feature_columns();

struct CalendarParts {
  int year = 0;
  int month = 0;
  int day = 0;
  bool operator==(const CalendarParts&) const = default;
};
CalendarParts expand_date(const Date& d);

/// Sort key: minutes since 1970-01-01 00:00 of the scheduled departure.
std::int64_t departure_key(const Date& d, ClockMinutes crs_dep);

/// Integer codes 0..k-1 over the lexicographically sorted categories of each
/// categorical column.
class LabelCodebook {
 public:
  void add_column(const std::string& column, std::vector<std::string> categories);
  bool has_column(std::string_view column) const;
  const std::vector<std::string>& categories(std::string_view column) const;
  /// Code of `value`. Unknown values throw unless `allow_unknown`, in which
  /// case they map to the category count.
  int encode(std::string_view column, std::string_view value,
             bool allow_unknown = false) const;
  const std::string& decode(std::string_view column, int code) const;

  nlohmann::json to_json() const;
  static LabelCodebook from_json(const nlohmann::json& j);
  bool operator==(const LabelCodebook&) const = default;

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> columns_;
  std::map<std::string, std::map<std::string, int, std::less<>>, std::less<>> index_;
};

/// Fits codes for AIRLINE, ORIGIN and DEST over `records`.
LabelCodebook fit_codebook(std::span<const FlightRecord> records);

struct FeatureTable {
  TargetMode mode = TargetMode::Components;
  std::vector<std::string> feature_names;
  std::vector<std::string> target_names;
  Matrix X;
  Matrix Y;
  std::vector<std::int64_t> timestamps;

  std::size_t rows() const { return static_cast<std::size_t>(X.rows()); }
  /// Throws DataError if the shape or ordering invariants fail.
  void check() const;
  /// Rows [begin, begin + count) as a new table.
  FeatureTable slice_rows(std::size_t begin, std::size_t count) const;
};

/// Encodes records into a chronologically sorted table. Ties keep input
/// order. `allow_unknown` lets categories missing from the codebook map to
/// the out-of-vocabulary code.
FeatureTable build_table(std::span<const FlightRecord> records,
                         const LabelCodebook& codebook, TargetMode mode,
                         bool allow_unknown = false);

inline constexpr double kDefaultTrainFraction = 0.75;

/// First floor(fraction * n) rows train, the rest test.
std::pair<FeatureTable, FeatureTable> chronological_split(
    const FeatureTable& table, double train_fraction = kDefaultTrainFraction);

enum class ZeroVariance { Error, CenterOnly };

/// Per-column z-scoring with population standard deviation, fit on training
/// rows only.
class Standardizer {
 public:
  Standardizer() = default;
  static Standardizer fit(const Matrix& X, const std::vector<int>& columns,
                          ZeroVariance policy = ZeroVariance::Error);

  Matrix apply(const Matrix& X) const;
  Matrix invert(const Matrix& X) const;

  const std::vector<int>& columns() const { return columns_; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& stds() const { return stds_; }
  bool empty() const { return columns_.empty(); }

  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);
  /// Flat (columns, means, stds) tensor form used by model files.
  Matrix to_matrix() const;
  static Standardizer from_matrix(const Matrix& m);

 private:
  std::vector<int> columns_;
  std::vector<double> means_;
  std::vector<double> stds_;
};

struct TableBundle {
  FeatureTable table;
  LabelCodebook codebook;
  std::optional<Standardizer> standardizer;
};

/// Writes <prefix>.X.csv, <prefix>.Y.csv and the <prefix>.json sidecar.
void save_table(const TableBundle& bundle, const std::string& prefix);
/// Loads from a prefix or from the sidecar path.
TableBundle load_table(const std::string& prefix_or_sidecar);

}  // namespace delaycast

#endif  // DELAYCAST_FEATURES_HPP

#ifndef DELAYCAST_PREPROCESS_HPP
#define DELAYCAST_PREPROCESS_HPP

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "delaycast/schema.hpp"

namespace delaycast {

struct FilterResult {
  std::vector<FlightRecord> retained;
  std::size_t removed = 0;
};

struct SumCheckResult {
  std::vector<FlightRecord> retained;
  std::size_t removed = 0;
  std::size_t removed_missing_arr_delay = 0;  // subset of removed
  double worst_residual = 0.0;                // over retained records
};

struct Bounds {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

struct DelayStats {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1) standard deviation, 0 for n < 2
  double min = 0.0;
  double max = 0.0;
};

struct PruneReport {
  std::size_t input_count = 0;
  std::size_t removed_cancelled_or_diverted = 0;
  std::size_t removed_missing_components = 0;
  std::size_t removed_sum_mismatch = 0;
  std::size_t removed_outliers = 0;
  std::size_t retained_count = 0;
  double iqr_lower = 0.0;
  double iqr_upper = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  DelayStats arr_delay_before;
  DelayStats arr_delay_after;

  bool partitions_input() const;
  /// Flat key=value block; percentages are given both of the original input
  /// and of the running survivor set.
  std::string to_key_value() const;
  /// One CSV row per stage.
  std::string to_csv() const;
};

inline constexpr double kDefaultSumTolerance = 0.5;

FilterResult drop_cancelled_diverted(std::span<const FlightRecord> records);
FilterResult drop_missing_components(std::span<const FlightRecord> records);
SumCheckResult verify_component_sum(std::span<const FlightRecord> records,
                                    double tolerance = kDefaultSumTolerance);

/// Quantile of an ascending-sorted sample by linear interpolation between
/// order statistics at position q * (n - 1).
double sorted_quantile(std::span<const double> sorted, double q);
/// (Q1 - 1.5 IQR, Q3 + 1.5 IQR).
Bounds iqr_bounds(std::span<const double> values);

/// Keeps records whose arr_delay lies in [lower, upper].
FilterResult filter_outliers(std::span<const FlightRecord> records,
                             const Bounds& bounds);

DelayStats arr_delay_stats(std::span<const FlightRecord> records);

struct PipelineResult {
  std::vector<FlightRecord> retained;
  PruneReport report;
};

/// Runs cancelled/diverted, missing components, sum verification and the
/// IQR filter in that order.
PipelineResult run_pipeline(std::span<const FlightRecord> records,
                            double sum_tolerance = kDefaultSumTolerance);

}  // namespace delaycast

#endif  // DELAYCAST_PREPROCESS_HPP

#ifndef DELAYCAST_STATS_HPP
#define DELAYCAST_STATS_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

#include "delaycast/schema.hpp"

namespace delaycast {

/// Pearson product-moment correlation. Throws DataError on unequal lengths,
/// fewer than two points, or a zero-variance input.
double pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationRow {
  std::string attribute;
  double r = 0.0;
};

/// Named numeric columns of equal length.
using ColumnSet = std::map<std::string, std::vector<double>, std::less<>>;

/// Continuous attributes screened against ARR_DELAY.
const std::vector<std::string>& continuous_attributes();

/// Extracts the continuous attributes and ARR_DELAY from records. Rows
/// missing any of them are skipped.
ColumnSet analysis_columns(std::span<const FlightRecord> records);

/// Correlation of each named attribute with `target`, sorted by r
/// descending then name ascending.
std::vector<CorrelationRow> correlation_table(const ColumnSet& columns,
                                              std::span<const double> target,
                                              const std::vector<std::string>& attributes);
std::string correlation_csv(const std::vector<CorrelationRow>& rows);

struct KruskalResult {
  double h = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Kruskal-Wallis H test with mid-ranks and tie correction.
KruskalResult kruskal_h(const std::vector<std::vector<double>>& groups);

/// Regularized lower and upper incomplete gamma functions P(a, x), Q(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);
/// Upper tail of the chi-square distribution.
double chi_square_sf(double x, int dof);

inline constexpr double kDefaultRedundancyAlpha = 0.05;

struct RedundancyRow {
  std::string primary;
  std::string candidate;
  std::size_t categories = 0;    // distinct primary values
  bool same_partition = false;
  double min_p_value = 1.0;
  double max_h = 0.0;
  bool redundant = false;
};

/// Tests whether `candidate` repeats the information in `primary`. For each
/// primary category, the ARR_DELAY sample of its rows is compared by a
/// Kruskal-Wallis test against the sample of the candidate category most of
/// those rows carry. The candidate is redundant when every comparison has
/// p > alpha.
RedundancyRow redundancy_test(std::string primary,
                              std::span<const std::string> primary_values,
                              std::string candidate,
                              std::span<const std::string> candidate_values,
                              std::span<const double> target,
                              double alpha = kDefaultRedundancyAlpha);

/// Runs the fixed categorical redundancy checks (airline identifiers against
/// AIRLINE, city names against airport codes).
std::vector<RedundancyRow> redundancy_report(std::span<const FlightRecord> records,
                                             double alpha = kDefaultRedundancyAlpha);
std::string redundancy_csv(const std::vector<RedundancyRow>& rows);

}  // namespace delaycast

#endif  // DELAYCAST_STATS_HPP

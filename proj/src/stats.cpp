#include "delaycast/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "delaycast/csv.hpp"
#include "delaycast/error.hpp"

namespace delaycast {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DataError("pearson: lengths differ (" + std::to_string(x.size()) +
                    " vs " + std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw DataError("pearson: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw DataError("pearson: zero variance input, correlation undefined");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

const std::vector<std::string>& continuous_attributes() {
  static const std::vector<std::string> names = {
      "CRS_DEP_TIME", "TAXI_OUT", "CRS_ARR_TIME", "TAXI_IN", "CRS_ELAPSED_TIME",
      "DISTANCE"};
  return names;
}

ColumnSet analysis_columns(std::span<const FlightRecord> records) {
  ColumnSet cols;
  for (const auto& name : continuous_attributes()) cols[name];
  auto& target = cols["ARR_DELAY"];
  for (const auto& r : records) {
    if (!r.crs_dep_time || !r.taxi_out || !r.crs_arr_time || !r.taxi_in ||
        !r.crs_elapsed_time || !r.arr_delay) {
      continue;
    }
    cols["CRS_DEP_TIME"].push_back(r.crs_dep_time->value);
    cols["TAXI_OUT"].push_back(*r.taxi_out);
    cols["CRS_ARR_TIME"].push_back(r.crs_arr_time->value);
    cols["TAXI_IN"].push_back(*r.taxi_in);
    cols["CRS_ELAPSED_TIME"].push_back(*r.crs_elapsed_time);
    cols["DISTANCE"].push_back(r.distance);
    target.push_back(*r.arr_delay);
  }
  return cols;
}

std::vector<CorrelationRow> correlation_table(const ColumnSet& columns,
                                              std::span<const double> target,
                                              const std::vector<std::string>& attributes) {
  std::vector<CorrelationRow> rows;
  for (const auto& name : attributes) {
    auto it = columns.find(name);
    if (it == columns.end()) throw DataError("correlation_table: unknown column " + name);
    rows.push_back({name, pearson(it->second, target)});
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.r != b.r) return a.r > b.r;
    return a.attribute < b.attribute;
  });
  return rows;
}

std::string correlation_csv(const std::vector<CorrelationRow>& rows) {
  std::ostringstream os;
  os << "attribute,pearson_r\n";
  for (const auto& r : rows) os << r.attribute << ',' << format_fixed(r.r, 4) << '\n';
  return os.str();
}

KruskalResult kruskal_h(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw DataError("kruskal_h: need at least two groups");
  struct Item {
    double value;
    std::size_t group;
  };
  std::vector<Item> pooled;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) {
      throw DataError("kruskal_h: group " + std::to_string(g) + " is empty");
    }
    for (double v : groups[g]) pooled.push_back({v, g});
  }
  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const Item& a, const Item& b) { return a.value < b.value; });

  const double n = static_cast<double>(pooled.size());
  std::vector<double> rank_sums(groups.size(), 0.0);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].value == pooled[i].value) ++j;
    // Ranks i+1 .. j share their mean.
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) rank_sums[pooled[k].group] += mid;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }

  KruskalResult res;
  res.dof = static_cast<int>(groups.size()) - 1;
  const double correction = 1.0 - tie_term / (n * n * n - n);
  if (correction <= 0.0) {
    // Every pooled value identical: no rank information at all.
    res.h = 0.0;
    res.p_value = 1.0;
    return res;
  }
  double sum = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    sum += rank_sums[g] * rank_sums[g] / static_cast<double>(groups[g].size());
  }
  const double h = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);
  res.h = std::max(0.0, h / correction);
  res.p_value = chi_square_sf(res.h, res.dof);
  return res;
}

namespace {

// Series for P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 1000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x), valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw DataError("gamma_p: requires a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_fraction(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw DataError("gamma_q: requires a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double chi_square_sf(double x, int dof) {
  if (dof < 1) throw DataError("chi_square_sf: dof must be >= 1");
  if (x <= 0.0) return 1.0;
  return std::clamp(gamma_q(0.5 * dof, 0.5 * x), 0.0, 1.0);
}

RedundancyRow redundancy_test(std::string primary,
                              std::span<const std::string> primary_values,
                              std::string candidate,
                              std::span<const std::string> candidate_values,
                              std::span<const double> target, double alpha) {
  if (primary_values.size() != candidate_values.size() ||
      primary_values.size() != target.size()) {
    throw DataError("redundancy_test: column lengths differ");
  }
  RedundancyRow row;
  row.primary = std::move(primary);
  row.candidate = std::move(candidate);

  std::map<std::string, std::vector<std::size_t>> by_primary;
  std::map<std::string, std::vector<std::size_t>> by_candidate;
  for (std::size_t i = 0; i < target.size(); ++i) {
    by_primary[primary_values[i]].push_back(i);
    by_candidate[candidate_values[i]].push_back(i);
  }
  row.categories = by_primary.size();
  row.same_partition = true;

  auto sample = [&](const std::vector<std::size_t>& idx) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(target[i]);
    return out;
  };

  for (const auto& [value, rows] : by_primary) {
    std::map<std::string, std::size_t> votes;
    for (auto i : rows) ++votes[candidate_values[i]];
    const auto best = std::max_element(
        votes.begin(), votes.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    const auto& matched = by_candidate.at(best->first);
    if (votes.size() != 1 || matched.size() != rows.size()) row.same_partition = false;
    const auto res = kruskal_h({sample(rows), sample(matched)});
    row.min_p_value = std::min(row.min_p_value, res.p_value);
    row.max_h = std::max(row.max_h, res.h);
  }
  row.redundant = row.min_p_value > alpha;
  return row;
}

std::vector<RedundancyRow> redundancy_report(std::span<const FlightRecord> records,
                                             double alpha) {
  std::vector<std::string> airline, airline_dot, airline_code, dot_code;
  std::vector<std::string> origin, origin_city, dest, dest_city;
  std::vector<double> target;
  for (const auto& r : records) {
    if (!r.arr_delay) continue;
    airline.push_back(r.airline);
    airline_dot.push_back(r.airline_dot);
    airline_code.push_back(r.airline_code);
    dot_code.push_back(r.dot_code);
    origin.push_back(r.origin);
    origin_city.push_back(r.origin_city);
    dest.push_back(r.dest);
    dest_city.push_back(r.dest_city);
    target.push_back(*r.arr_delay);
  }
  if (target.empty()) throw DataError("redundancy_report: no records with ARR_DELAY");
  return {
      redundancy_test("AIRLINE", airline, "AIRLINE_DOT", airline_dot, target, alpha),
      redundancy_test("AIRLINE", airline, "AIRLINE_CODE", airline_code, target, alpha),
      redundancy_test("AIRLINE", airline, "DOT_CODE", dot_code, target, alpha),
      redundancy_test("ORIGIN", origin, "ORIGIN_CITY", origin_city, target, alpha),
      redundancy_test("DEST", dest, "DEST_CITY", dest_city, target, alpha),
  };
}

std::string redundancy_csv(const std::vector<RedundancyRow>& rows) {
  std::ostringstream os;
  os << "primary,candidate,categories,same_partition,max_h,min_p_value,redundant\n";
  for (const auto& r : rows) {
    os << r.primary << ',' << r.candidate << ',' << r.categories << ','
       << (r.same_partition ? 1 : 0) << ',' << format_fixed(r.max_h, 6) << ','
       << format_fixed(r.min_p_value, 6) << ',' << (r.redundant ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace delaycast

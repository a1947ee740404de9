#include "delaycast/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "delaycast/csv.hpp"
#include "delaycast/error.hpp"

namespace delaycast {

FilterResult drop_cancelled_diverted(std::span<const FlightRecord> records) {
  FilterResult out;
  for (const auto& r : records) {
    if (r.cancelled || r.diverted) {
      ++out.removed;
    } else {
      out.retained.push_back(r);
    }
  }
  return out;
}

FilterResult drop_missing_components(std::span<const FlightRecord> records) {
  FilterResult out;
  for (const auto& r : records) {
    if (r.has_all_components()) {
      out.retained.push_back(r);
    } else {
      ++out.removed;
    }
  }
  return out;
}

SumCheckResult verify_component_sum(std::span<const FlightRecord> records,
                                    double tolerance) {
  SumCheckResult out;
  for (const auto& r : records) {
    if (!r.has_all_components()) {
      throw DataError("verify_component_sum: record without all five components");
    }
    if (!r.arr_delay) {
      ++out.removed;
      ++out.removed_missing_arr_delay;
      continue;
    }
    const double residual = std::abs(r.component_sum() - *r.arr_delay);
    if (residual <= tolerance) {
      out.worst_residual = std::max(out.worst_residual, residual);
      out.retained.push_back(r);
    } else {
      ++out.removed;
    }
  }
  return out;
}

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DataError("quantile of empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted[lo];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

Bounds iqr_bounds(std::span<const double> values) {
  if (values.empty()) throw DataError("iqr_bounds: empty input");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double q1 = sorted_quantile(sorted, 0.25);
  const double q3 = sorted_quantile(sorted, 0.75);
  const double iqr = q3 - q1;
  return {q1 - 1.5 * iqr, q3 + 1.5 * iqr};
}

FilterResult filter_outliers(std::span<const FlightRecord> records,
                             const Bounds& bounds) {
  FilterResult out;
  for (const auto& r : records) {
    if (!r.arr_delay) throw DataError("filter_outliers: record without ARR_DELAY");
    const double d = *r.arr_delay;
    if (d >= bounds.lower && d <= bounds.upper) {
      out.retained.push_back(r);
    } else {
      ++out.removed;
    }
  }
  return out;
}

DelayStats arr_delay_stats(std::span<const FlightRecord> records) {
  DelayStats s;
  double sum = 0.0;
  for (const auto& r : records) {
    if (!r.arr_delay) continue;
    const double d = *r.arr_delay;
    if (s.count == 0) {
      s.min = s.max = d;
    } else {
      s.min = std::min(s.min, d);
      s.max = std::max(s.max, d);
    }
    sum += d;
    ++s.count;
  }
  if (s.count == 0) return s;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count > 1) {
    double ss = 0.0;
    for (const auto& r : records) {
      if (r.arr_delay) ss += (*r.arr_delay - s.mean) * (*r.arr_delay - s.mean);
    }
    s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
  }
  return s;
}

PipelineResult run_pipeline(std::span<const FlightRecord> records,
                            double sum_tolerance) {
  PipelineResult out;
  auto& rep = out.report;
  rep.input_count = records.size();

  auto stage1 = drop_cancelled_diverted(records);
  rep.removed_cancelled_or_diverted = stage1.removed;
  auto stage2 = drop_missing_components(stage1.retained);
  rep.removed_missing_components = stage2.removed;
  auto stage3 = verify_component_sum(stage2.retained, sum_tolerance);
  rep.removed_sum_mismatch = stage3.removed;
  if (stage3.retained.empty()) {
    throw DataError("preprocess: no records survive before outlier filtering");
  }

  std::vector<double> delays;
  delays.reserve(stage3.retained.size());
  for (const auto& r : stage3.retained) delays.push_back(*r.arr_delay);
  std::vector<double> sorted = delays;
  std::sort(sorted.begin(), sorted.end());
  rep.q1 = sorted_quantile(sorted, 0.25);
  rep.q3 = sorted_quantile(sorted, 0.75);
  const Bounds bounds = iqr_bounds(delays);
  rep.iqr_lower = bounds.lower;
  rep.iqr_upper = bounds.upper;
  rep.arr_delay_before = arr_delay_stats(stage3.retained);

  auto stage4 = filter_outliers(stage3.retained, bounds);
  rep.removed_outliers = stage4.removed;
  rep.retained_count = stage4.retained.size();
  if (stage4.retained.empty()) throw DataError("preprocess: no records survive");
  rep.arr_delay_after = arr_delay_stats(stage4.retained);

  if (!rep.partitions_input()) {
    throw DataError("preprocess: stage counts do not partition the input");
  }
  out.retained = std::move(stage4.retained);
  return out;
}

bool PruneReport::partitions_input() const {
  return input_count == retained_count + removed_cancelled_or_diverted +
                            removed_missing_components + removed_sum_mismatch +
                            removed_outliers &&
         iqr_lower <= iqr_upper;
}

namespace {

struct Stage {
  const char* name;
  std::size_t removed;
  std::size_t before;
};

std::vector<Stage> stages(const PruneReport& r) {
  std::size_t running = r.input_count;
  std::vector<Stage> out;
  for (auto [name, removed] :
       {std::pair{"cancelled_or_diverted", r.removed_cancelled_or_diverted},
        std::pair{"missing_components", r.removed_missing_components},
        std::pair{"sum_mismatch", r.removed_sum_mismatch},
        std::pair{"outliers", r.removed_outliers}}) {
    out.push_back({name, removed, running});
    running -= removed;
  }
  return out;
}

double percent(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

void stats_lines(std::ostream& os, const char* prefix, const DelayStats& s) {
  os << prefix << "_count=" << s.count << '\n'
     << prefix << "_mean=" << format_fixed(s.mean, 3) << '\n'
     << prefix << "_std=" << format_fixed(s.std, 3) << '\n'
     << prefix << "_min=" << format_double(s.min) << '\n'
     << prefix << "_max=" << format_double(s.max) << '\n';
}

}  // namespace

std::string PruneReport::to_key_value() const {
  std::ostringstream os;
  os << "input_count=" << input_count << '\n';
  for (const auto& s : stages(*this)) {
    os << "removed_" << s.name << '=' << s.removed << '\n'
       << "removed_" << s.name << "_pct_of_input="
       << format_fixed(percent(s.removed, input_count), 3) << '\n'
       << "removed_" << s.name << "_pct_of_survivors="
       << format_fixed(percent(s.removed, s.before), 3) << '\n';
  }
  os << "retained_count=" << retained_count << '\n'
     << "q1=" << format_double(q1) << '\n'
     << "q3=" << format_double(q3) << '\n'
     << "iqr_lower=" << format_double(iqr_lower) << '\n'
     << "iqr_upper=" << format_double(iqr_upper) << '\n';
  stats_lines(os, "arr_delay_before", arr_delay_before);
  stats_lines(os, "arr_delay_after", arr_delay_after);
  return os.str();
}

std::string PruneReport::to_csv() const {
  std::ostringstream os;
  os << "stage,survivors_before,removed,survivors_after,pct_of_input,pct_of_survivors\n";
  for (const auto& s : stages(*this)) {
    os << s.name << ',' << s.before << ',' << s.removed << ','
       << (s.before - s.removed) << ',' << format_fixed(percent(s.removed, input_count), 3)
       << ',' << format_fixed(percent(s.removed, s.before), 3) << '\n';
  }
  return os.str();
}

}  // namespace delaycast

#include "delaycast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "delaycast/csv.hpp"
#include "delaycast/error.hpp"
#include "delaycast/numerics.hpp"
#include "delaycast/preprocess.hpp"

namespace delaycast {

std::string_view to_string(RowLabel label) {
  switch (label) {
    case RowLabel::Clean: return "clean";
    case RowLabel::Cancelled: return "cancelled";
    case RowLabel::Missing: return "missing";
    case RowLabel::Mismatch: return "mismatch";
    case RowLabel::Outlier: return "outlier";
  }
  return "?";
}

RowLabel parse_row_label(std::string_view s) {
  for (auto l : {RowLabel::Clean, RowLabel::Cancelled, RowLabel::Missing, RowLabel::Mismatch,
                 RowLabel::Outlier})
    if (to_string(l) == s) return l;
  throw ParseError("unknown row label '" + std::string(s) + "'");
}

void SynthConfig::validate() const {
  if (count < 1) throw DataError("synth: count must be >= 1");
  if (days < 1) throw DataError("synth: days must be >= 1");
  if (airlines < 1 || airports < 1) throw DataError("synth: vocabulary sizes must be >= 1");
  const double rates[] = {cancel_rate, missing_rate, mismatch_rate, outlier_rate, diverted_share};
  for (double r : rates)
    if (!(r >= 0.0 && r <= 1.0)) throw DataError("synth: rates must lie in [0, 1]");
  if (cancel_rate + missing_rate + mismatch_rate + outlier_rate > 1.0 + 1e-12)
    throw DataError("synth: label rates sum past 1");
  if (!(outlier_magnitude >= 0.0)) throw DataError("synth: outlier magnitude must be >= 0");
  for (const auto* p : {&carrier, &weather, &nas, &security, &late_aircraft}) {
    if (!(p->zero_prob >= 0.0 && p->zero_prob <= 1.0) || !(p->scale >= 0.0) ||
        !(p->floor >= 0.0 && p->floor <= 1.0))
      throw DataError("synth: component process out of range");
  }
  if (lag_rows < 1) throw DataError("synth: lag_rows must be >= 1");
}

namespace {

nlohmann::json process_json(const ComponentProcess& p) {
  return {{"zero_prob", p.zero_prob}, {"scale", p.scale}, {"floor", p.floor}};
}

const char* const kAirlines[] = {"AA", "DL", "UA", "WN", "B6", "AS", "NK", "F9",
                                 "G4", "HA", "OO", "YX", "MQ", "9E", "OH"};
const char* const kAirports[] = {"ATL", "DFW", "DEN", "ORD", "LAX", "JFK", "LAS", "MCO",
                                 "MIA", "CLT", "SEA", "PHX", "EWR", "SFO", "IAH", "BOS"};

std::string vocab(const char* const* names, std::size_t n, int i, char prefix) {
  if (static_cast<std::size_t>(i) < n) return names[i];
  return prefix + std::to_string(i);
}

double draw(Rng& rng, const ComponentProcess& p, double mean) {
  if (rng.bernoulli(p.zero_prob)) return 0.0;
  return mean * (p.floor + (1.0 - p.floor) * rng.exponential(1.0));
}

ClockMinutes wrap(double minutes) {
  long m = std::lround(minutes) % 1440;
  if (m < 0) m += 1440;
  return {static_cast<int>(m)};
}

// Rescales integer components to sum to `total` with largest-remainder
// rounding.
void set_total(std::array<std::optional<double>, kComponentCount>& comps, double total) {
  double sum = 0.0;
  for (const auto& c : comps) sum += *c;
  if (sum <= 0.0) {
    for (auto& c : comps) c = 0.0;
    comps[static_cast<int>(Component::Nas)] = total;
    return;
  }
  std::array<double, kComponentCount> floors{}, rem{};
  double assigned = 0.0;
  for (std::size_t i = 0; i < kComponentCount; ++i) {
    const double v = *comps[i] * total / sum;
    floors[i] = std::floor(v);
    rem[i] = v - floors[i];
    assigned += floors[i];
  }
  std::array<std::size_t, kComponentCount> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  auto left = static_cast<long>(std::lround(total - assigned));
  for (std::size_t k = 0; left > 0; k = (k + 1) % kComponentCount, --left) floors[order[k]] += 1;
  for (std::size_t i = 0; i < kComponentCount; ++i) comps[i] = floors[i];
}

double arrival_total(const FlightRecord& r) { return r.component_sum(); }

// Keeps dependent time columns consistent with ARR_DELAY.
void fill_arrival_times(FlightRecord& r) {
  const double delay = *r.arr_delay;
  r.arr_time = wrap(r.crs_arr_time->value + delay);
  r.wheels_on = wrap(r.arr_time->value - *r.taxi_in);
}

}  // namespace

nlohmann::json SynthConfig::to_json() const {
  return {{"count", count},
          {"seed", seed},
          {"start_date", format_date(start_date)},
          {"days", days},
          {"airlines", airlines},
          {"airports", airports},
          {"cancel_rate", cancel_rate},
          {"missing_rate", missing_rate},
          {"mismatch_rate", mismatch_rate},
          {"outlier_rate", outlier_rate},
          {"outlier_magnitude", outlier_magnitude},
          {"diverted_share", diverted_share},
          {"carrier", process_json(carrier)},
          {"weather", process_json(weather)},
          {"nas", process_json(nas)},
          {"security", process_json(security)},
          {"late_aircraft", process_json(late_aircraft)},
          {"lag_rows", lag_rows}};
}

SynthResult generate(const SynthConfig& config) {
  config.validate();
  const Rng root(config.seed);
  Rng label_rng = root.substream(1);
  Rng rng = root.substream(2);
  Rng outlier_rng = root.substream(3);

  SynthResult out;
  const std::size_t n = config.count;
  out.labels.resize(n);
  for (auto& label : out.labels) {
    const double u = label_rng.uniform();
    double edge = config.cancel_rate;
    if (u < edge) {
      label = RowLabel::Cancelled;
    } else if (u < (edge += config.missing_rate)) {
      label = RowLabel::Missing;
    } else if (u < (edge += config.mismatch_rate)) {
      label = RowLabel::Mismatch;
    } else if (u < (edge += config.outlier_rate)) {
      label = RowLabel::Outlier;
    } else {
      label = RowLabel::Clean;
    }
    ++out.counts[static_cast<std::size_t>(label)];
  }

  // rows per day, then sorted departure times within each day
  std::vector<int> row_day(n);
  for (std::size_t i = 0; i < n; ++i)
    row_day[i] = static_cast<int>(i * static_cast<std::size_t>(config.days) / n);
  std::vector<int> dep(n);
  for (std::size_t i = 0; i < n; ++i) dep[i] = 300 + static_cast<int>(rng.below(1080));
  for (std::size_t b = 0; b < n;) {
    std::size_t e = b;
    while (e < n && row_day[e] == row_day[b]) ++e;
    std::sort(dep.begin() + static_cast<long>(b), dep.begin() + static_cast<long>(e));
    b = e;
  }

  const std::size_t n_airline_names = std::size(kAirlines);
  const std::size_t n_airport_names = std::size(kAirports);
  std::vector<double> recent_taxi;  // clean rows of the current day
  int current_day = -1;

  out.records.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    FlightRecord& r = out.records[i];
    const RowLabel label = out.labels[i];
    if (row_day[i] != current_day) {
      current_day = row_day[i];
      recent_taxi.clear();
    }
    r.fl_date = std::chrono::sys_days(config.start_date) + std::chrono::days(row_day[i]);
    const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.airlines)));
    r.airline = vocab(kAirlines, n_airline_names, a, 'Z');
    r.airline_code = r.airline;
    r.airline_dot = "Carrier " + r.airline + ": " + r.airline;
    r.dot_code = std::to_string(19000 + a);
    r.fl_number = 100 + static_cast<int>(rng.below(4900));
    const int o = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.airports)));
    int d = o;
    if (config.airports > 1) {
      d = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.airports - 1)));
      if (d >= o) ++d;
    }
    r.origin = vocab(kAirports, n_airport_names, o, 'X');
    r.dest = vocab(kAirports, n_airport_names, d, 'X');
    r.origin_city = "City " + r.origin;
    r.dest_city = "City " + r.dest;
    r.distance = 150.0 + 110.0 * std::abs(o - d) + static_cast<double>(rng.below(200));
    const double crs_elapsed = std::round(r.distance / 8.0 + 35.0);
    r.crs_dep_time = ClockMinutes{dep[i]};
    r.crs_arr_time = wrap(dep[i] + crs_elapsed);
    r.crs_elapsed_time = crs_elapsed;

    const double taxi_out = std::round(8.0 + rng.exponential(12.0));
    const double taxi_in = std::round(3.0 + rng.exponential(5.0));

    if (label == RowLabel::Cancelled) {
      if (rng.bernoulli(config.diverted_share)) {
        r.diverted = true;
        r.dep_delay = std::round(rng.exponential(20.0) - 5.0);
        r.dep_time = wrap(dep[i] + *r.dep_delay);
        r.taxi_out = taxi_out;
        r.wheels_off = wrap(r.dep_time->value + taxi_out);
      } else {
        r.cancelled = true;
        r.cancellation_code = std::string(1, static_cast<char>('A' + rng.below(4)));
      }
      continue;
    }

    r.taxi_out = taxi_out;
    r.taxi_in = taxi_in;
    const double air_time = std::max(20.0, crs_elapsed - taxi_out - taxi_in +
                                               std::round(rng.normal() * 5.0));
    r.air_time = air_time;
    r.elapsed_time = taxi_out + air_time + taxi_in;

    if (label == RowLabel::Missing) {
      r.arr_delay = std::round(rng.normal() * 12.0 - 4.0);
    } else {
      const int month = static_cast<int>(static_cast<unsigned>(r.fl_date.month()));
      const double hour = dep[i] / 60.0;
      const double carrier_mean =
          config.carrier.scale * (0.4 + 1.2 * a / std::max(1, config.airlines - 1));
      const double weather_mean =
          config.weather.scale * (1.0 + 0.8 * std::cos(2.0 * std::numbers::pi * (month - 1) / 12.0));
      const double nas_mean = config.nas.scale * (0.5 + 1.5 * hour / 24.0);
      double lag_taxi = 20.0;
      if (!recent_taxi.empty()) {
        const std::size_t k = std::min(recent_taxi.size(), static_cast<std::size_t>(config.lag_rows));
        lag_taxi = std::accumulate(recent_taxi.end() - static_cast<long>(k), recent_taxi.end(), 0.0) /
                   static_cast<double>(k);
      }
      const double late_mean = config.late_aircraft.scale * lag_taxi;

      r.components[0] = std::round(draw(rng, config.carrier, carrier_mean));
      r.components[1] = std::round(draw(rng, config.weather, weather_mean));
      r.components[2] = std::round(draw(rng, config.nas, nas_mean));
      r.components[3] = std::round(draw(rng, config.security, config.security.scale));
      r.components[4] = std::round(draw(rng, config.late_aircraft, late_mean));
      const double total = arrival_total(r);
      r.arr_delay = total;
      if (label == RowLabel::Mismatch) {
        const double k = 1.0 + static_cast<double>(rng.below(30));
        r.arr_delay = rng.bernoulli(0.5) ? total + k : total - k;
      }
      if (label == RowLabel::Clean) recent_taxi.push_back(taxi_out);
    }
    r.dep_delay = std::round(*r.arr_delay + rng.normal() * 4.0);
    r.dep_time = wrap(dep[i] + *r.dep_delay);
    r.wheels_off = wrap(r.dep_time->value + taxi_out);
    fill_arrival_times(r);
  }

  // Place the IQR fence: outliers count as +inf so the fence depends on clean
  // rows only, clean rows are pulled inside it, outliers pushed past it.
  std::vector<std::size_t> clean_rows, outlier_rows;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.labels[i] == RowLabel::Clean) clean_rows.push_back(i);
    if (out.labels[i] == RowLabel::Outlier) outlier_rows.push_back(i);
  }
  const std::size_t m = clean_rows.size() + outlier_rows.size();
  if (m > 0) {
    std::vector<double> sorted;
    for (auto i : clean_rows) sorted.push_back(*out.records[i].arr_delay);
    std::sort(sorted.begin(), sorted.end());
    const double p3 = 0.75 * static_cast<double>(m - 1);
    const auto hi_pos = static_cast<std::size_t>(std::floor(p3)) + 1;
    if (!outlier_rows.empty() && (m < 2 || hi_pos >= clean_rows.size())) {
      throw DataError("synth: too few clean rows for the outlier share; the upper quartile "
                      "would fall on an outlier");
    }
    double upper = std::numeric_limits<double>::infinity();
    if (!clean_rows.empty() && m >= 2) {
      sorted.resize(m, std::numeric_limits<double>::infinity());
      const double q1 = sorted_quantile(sorted, 0.25);
      const double q3 = sorted_quantile(sorted, 0.75);
      const double lower = q1 - 1.5 * (q3 - q1);
      upper = q3 + 1.5 * (q3 - q1);
      if (!std::isfinite(upper)) upper = sorted[clean_rows.size() - 1];
      const double x_hi = sorted[std::min(hi_pos, clean_rows.size() - 1)];
      const double x_lo = sorted[static_cast<std::size_t>(std::floor(0.25 * static_cast<double>(m - 1)))];
      const double top = sorted[clean_rows.size() - 1];
      const double cap = std::floor(upper);
      if (x_hi > cap && top > upper) throw DataError("synth: degenerate spread, cannot place fence");
      for (auto i : clean_rows) {
        FlightRecord& r = out.records[i];
        double t = *r.arr_delay;
        if (t > upper) {
          t = std::round(x_hi + (t - x_hi) * (cap - x_hi) / (top - x_hi));
          t = std::clamp(t, x_hi, cap);
        } else if (t < lower) {
          t = std::min(std::ceil(lower), x_lo);
        } else {
          continue;
        }
        set_total(r.components, t);
        r.arr_delay = t;
        fill_arrival_times(r);
      }
    }
    out.iqr_upper = upper;
    for (auto i : outlier_rows) {
      FlightRecord& r = out.records[i];
      const double base = std::isfinite(upper) ? std::floor(upper) : 0.0;
      const double t = base + 1.0 + std::round(config.outlier_magnitude *
                                               (0.5 + outlier_rng.exponential(1.0)));
      set_total(r.components, t);
      r.arr_delay = t;
      fill_arrival_times(r);
    }
  }
  return out;
}

void write_labels(std::span<const RowLabel> labels, std::ostream& out) {
  out << "row,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << (i + 1) << ',' << to_string(labels[i]) << '\n';
  if (!out) throw Error("io", "failed writing labels");
}

std::vector<RowLabel> read_labels(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields) || fields.size() != 2 || fields[0] != "row" || fields[1] != "label")
    throw ParseError("labels: expected header row,label");
  std::vector<RowLabel> out;
  while (reader.next(fields)) {
    if (fields.size() != 2) throw ParseError("labels: bad row at line " + std::to_string(reader.line()));
    if (fields[0] != std::to_string(out.size() + 1))
      throw ParseError("labels: rows out of sequence at " + fields[0]);
    out.push_back(parse_row_label(fields[1]));
  }
  return out;
}

}  // namespace delaycast

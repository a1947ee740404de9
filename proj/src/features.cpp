#include "delaycast/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "delaycast/csv.hpp"
#include "delaycast/error.hpp"

namespace delaycast {

using nlohmann::json;

std::string_view to_string(TargetMode mode) {
  return mode == TargetMode::Components ? "components" : "total";
}

TargetMode parse_target_mode(std::string_view s) {
  if (s == "components") return TargetMode::Components;
  if (s == "total") return TargetMode::Total;
  throw DataError("unknown target mode '" + std::string(s) +
                  "' (valid: components, total)");
}

const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names = {
      "CRS_DEP_TIME", "TAXI_OUT", "CRS_ARR_TIME", "TAXI_IN", "DISTANCE", "YEAR",
      "MONTH",        "DAY",      "AIRLINE",      "ORIGIN",  "DEST"};
  return names;
}

std::vector<std::string> target_names(TargetMode mode) {
  if (mode == TargetMode::Total) return {"ARR_DELAY"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < kComponentCount; ++i) {
    out.emplace_back(component_column(static_cast<Component>(i)));
  }
  return out;
}

std::vector<int> continuous_feature_columns() {
  return {feature::kCrsDepTime, feature::kTaxiOut, feature::kCrsArrTime,
          feature::kTaxiIn, feature::kDistance};
}

CalendarParts expand_date(const Date& d) {
  return {static_cast<int>(d.year()), static_cast<int>(static_cast<unsigned>(d.month())),
          static_cast<int>(static_cast<unsigned>(d.day()))};
}

std::int64_t departure_key(const Date& d, ClockMinutes crs_dep) {
  const auto days = std::chrono::sys_days(d).time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 1440 + crs_dep.value;
}

// --- LabelCodebook ---------------------------------------------------------

void LabelCodebook::add_column(const std::string& column,
                               std::vector<std::string> categories) {
  std::sort(categories.begin(), categories.end());
  categories.erase(std::unique(categories.begin(), categories.end()), categories.end());
  auto& idx = index_[column];
  idx.clear();
  for (std::size_t i = 0; i < categories.size(); ++i) {
    idx.emplace(categories[i], static_cast<int>(i));
  }
  columns_[column] = std::move(categories);
}

bool LabelCodebook::has_column(std::string_view column) const {
  return columns_.find(column) != columns_.end();
}

const std::vector<std::string>& LabelCodebook::categories(std::string_view column) const {
  auto it = columns_.find(column);
  if (it == columns_.end()) {
    throw DataError("codebook has no column " + std::string(column));
  }
  return it->second;
}

int LabelCodebook::encode(std::string_view column, std::string_view value,
                          bool allow_unknown) const {
  auto col = index_.find(column);
  if (col == index_.end()) throw DataError("codebook has no column " + std::string(column));
  auto it = col->second.find(value);
  if (it != col->second.end()) return it->second;
  if (allow_unknown) return static_cast<int>(col->second.size());
  throw DataError("category '" + std::string(value) + "' not in codebook for " +
                  std::string(column));
}

const std::string& LabelCodebook::decode(std::string_view column, int code) const {
  const auto& cats = categories(column);
  if (code < 0 || static_cast<std::size_t>(code) >= cats.size()) {
    throw DataError("code " + std::to_string(code) + " out of range for " +
                    std::string(column));
  }
  return cats[static_cast<std::size_t>(code)];
}

json LabelCodebook::to_json() const {
  json j = json::object();
  for (const auto& [name, cats] : columns_) j[name] = cats;
  return j;
}

LabelCodebook LabelCodebook::from_json(const json& j) {
  LabelCodebook cb;
  for (const auto& [name, cats] : j.items()) {
    cb.add_column(name, cats.get<std::vector<std::string>>());
  }
  return cb;
}

LabelCodebook fit_codebook(std::span<const FlightRecord> records) {
  if (records.empty()) throw DataError("fit_codebook: no records");
  std::set<std::string> airline, origin, dest;
  for (const auto& r : records) {
    airline.insert(r.airline);
    origin.insert(r.origin);
    dest.insert(r.dest);
  }
  LabelCodebook cb;
  cb.add_column("AIRLINE", {airline.begin(), airline.end()});
  cb.add_column("ORIGIN", {origin.begin(), origin.end()});
  cb.add_column("DEST", {dest.begin(), dest.end()});
  return cb;
}

// --- FeatureTable ----------------------------------------------------------

void FeatureTable::check() const {
  const auto n = X.rows();
  if (Y.rows() != n || static_cast<Eigen::Index>(timestamps.size()) != n) {
    throw DataError("feature table rows disagree: X " + shape_string(X) + ", Y " +
                    shape_string(Y) + ", timestamps " + std::to_string(timestamps.size()));
  }
  if (X.cols() != static_cast<Eigen::Index>(feature_names.size()) ||
      Y.cols() != static_cast<Eigen::Index>(target_names.size())) {
    throw DataError("feature table column names do not match matrix widths");
  }
  if (!std::is_sorted(timestamps.begin(), timestamps.end())) {
    throw DataError("feature table timestamps are not nondecreasing");
  }
}

FeatureTable FeatureTable::slice_rows(std::size_t begin, std::size_t count) const {
  if (begin + count > rows()) throw ShapeError("slice_rows: range outside table");
  FeatureTable out;
  out.mode = mode;
  out.feature_names = feature_names;
  out.target_names = target_names;
  const auto b = static_cast<Eigen::Index>(begin);
  const auto c = static_cast<Eigen::Index>(count);
  out.X = X.middleRows(b, c);
  out.Y = Y.middleRows(b, c);
  out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                        timestamps.begin() + static_cast<std::ptrdiff_t>(begin + count));
  return out;
}

FeatureTable build_table(std::span<const FlightRecord> records,
                         const LabelCodebook& codebook, TargetMode mode,
                         bool allow_unknown) {
  const auto n = records.size();
  std::vector<std::int64_t> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[i];
    auto need = [&](bool present, const char* field) {
      if (!present) {
        throw DataError("build_table: record " + std::to_string(i + 1) +
                        " is missing " + field);
      }
    };
    need(r.crs_dep_time.has_value(), "CRS_DEP_TIME");
    need(r.taxi_out.has_value(), "TAXI_OUT");
    need(r.crs_arr_time.has_value(), "CRS_ARR_TIME");
    need(r.taxi_in.has_value(), "TAXI_IN");
    if (mode == TargetMode::Total) {
      need(r.arr_delay.has_value(), "ARR_DELAY");
    } else {
      need(r.has_all_components(), "delay components");
    }
    keys[i] = departure_key(r.fl_date, *r.crs_dep_time);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

  FeatureTable t;
  t.mode = mode;
  t.feature_names.assign(feature_names().begin(), feature_names().end());
  t.target_names = target_names(mode);
  t.X.resize(static_cast<Eigen::Index>(n), kFeatureCount);
  t.Y.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t.target_names.size()));
  t.timestamps.resize(n);
  for (std::size_t row = 0; row < n; ++row) {
    const auto& r = records[order[row]];
    const auto i = static_cast<Eigen::Index>(row);
    const auto cal = expand_date(r.fl_date);
    t.X(i, feature::kCrsDepTime) = r.crs_dep_time->value;
    t.X(i, feature::kTaxiOut) = *r.taxi_out;
    t.X(i, feature::kCrsArrTime) = r.crs_arr_time->value;
    t.X(i, feature::kTaxiIn) = *r.taxi_in;
    t.X(i, feature::kDistance) = r.distance;
    t.X(i, feature::kYear) = cal.year;
    t.X(i, feature::kMonth) = cal.month;
    t.X(i, feature::kDay) = cal.day;
    t.X(i, feature::kAirline) = codebook.encode("AIRLINE", r.airline, allow_unknown);
    t.X(i, feature::kOrigin) = codebook.encode("ORIGIN", r.origin, allow_unknown);
    t.X(i, feature::kDest) = codebook.encode("DEST", r.dest, allow_unknown);
    if (mode == TargetMode::Total) {
      t.Y(i, 0) = *r.arr_delay;
    } else {
      for (std::size_t c = 0; c < kComponentCount; ++c) {
        t.Y(i, static_cast<Eigen::Index>(c)) = *r.components[c];
      }
    }
    t.timestamps[row] = keys[order[row]];
  }
  return t;
}

std::pair<FeatureTable, FeatureTable> chronological_split(const FeatureTable& table,
                                                          double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw DataError("chronological_split: train fraction must be in (0, 1)");
  }
  const auto n = table.rows();
  const auto n_train =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train == n) {
    throw DataError("chronological_split: " + std::to_string(n) +
                    " rows leave an empty train or test side");
  }
  return {table.slice_rows(0, n_train), table.slice_rows(n_train, n - n_train)};
}

// --- Standardizer ----------------------------------------------------------

Standardizer Standardizer::fit(const Matrix& X, const std::vector<int>& columns,
                               ZeroVariance policy) {
  if (X.rows() == 0) throw DataError("Standardizer::fit: no rows");
  Standardizer s;
  std::string constant;
  const double n = static_cast<double>(X.rows());
  for (int c : columns) {
    if (c < 0 || c >= X.cols()) throw ShapeError("Standardizer::fit: column out of range");
    double mean = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) mean += X(i, c);
    mean /= n;
    double ss = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) ss += (X(i, c) - mean) * (X(i, c) - mean);
    double sd = std::sqrt(ss / n);
    if (!(sd > 0.0)) {
      if (policy == ZeroVariance::Error) {
        if (!constant.empty()) constant += ",";
        constant += std::to_string(c);
        continue;
      }
      sd = 1.0;
    }
    s.columns_.push_back(c);
    s.means_.push_back(mean);
    s.stds_.push_back(sd);
  }
  if (!constant.empty()) {
    throw DataError("Standardizer::fit: zero-variance columns " + constant);
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& X) const {
  Matrix out = X;
  for (std::size_t k = 0; k < columns_.size(); ++k) {
    if (columns_[k] >= X.cols()) throw ShapeError("Standardizer::apply: too few columns");
    out.col(columns_[k]) = (X.col(columns_[k]).array() - means_[k]) / stds_[k];
  }
  return out;
}

Matrix Standardizer::invert(const Matrix& X) const {
  Matrix out = X;
  for (std::size_t k = 0; k < columns_.size(); ++k) {
    if (columns_[k] >= X.cols()) throw ShapeError("Standardizer::invert: too few columns");
    out.col(columns_[k]) = X.col(columns_[k]).array() * stds_[k] + means_[k];
  }
  return out;
}

json Standardizer::to_json() const {
  return json{{"columns", columns_}, {"means", means_}, {"stds", stds_}};
}

Standardizer Standardizer::from_json(const json& j) {
  Standardizer s;
  s.columns_ = j.at("columns").get<std::vector<int>>();
  s.means_ = j.at("means").get<std::vector<double>>();
  s.stds_ = j.at("stds").get<std::vector<double>>();
  if (s.means_.size() != s.columns_.size() || s.stds_.size() != s.columns_.size()) {
    throw DataError("standardizer parameters have inconsistent lengths");
  }
  return s;
}

Matrix Standardizer::to_matrix() const {
  Matrix m(3, static_cast<Eigen::Index>(columns_.size()));
  for (std::size_t k = 0; k < columns_.size(); ++k) {
    const auto c = static_cast<Eigen::Index>(k);
    m(0, c) = columns_[k];
    m(1, c) = means_[k];
    m(2, c) = stds_[k];
  }
  return m;
}

Standardizer Standardizer::from_matrix(const Matrix& m) {
  if (m.rows() != 3) throw DataError("standardizer tensor must have 3 rows");
  Standardizer s;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    s.columns_.push_back(static_cast<int>(m(0, c)));
    s.means_.push_back(m(1, c));
    s.stds_.push_back(m(2, c));
  }
  return s;
}

// --- persistence -----------------------------------------------------------

namespace {

void write_matrix_csv(const std::string& path, const std::vector<std::string>& header,
                      const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot open " + path + " for writing");
  write_csv_row(out, header);
  std::vector<std::string> row(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row[static_cast<std::size_t>(j)] = format_double(m(i, j));
    }
    write_csv_row(out, row);
  }
  if (!out) throw Error("io", "write failure on " + path);
}

Matrix read_matrix_csv(const std::string& path, const std::vector<std::string>& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path);
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields) || fields != header) {
    throw SchemaError(path + ": header does not match the sidecar");
  }
  std::vector<double> values;
  std::size_t rows = 0;
  while (reader.next(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != header.size()) {
      throw ParseError(path + ": row " + std::to_string(rows + 1) + " has " +
                       std::to_string(fields.size()) + " fields");
    }
    for (const auto& f : fields) {
      double v = 0.0;
      auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        throw ParseError(path + ": bad number '" + f + "' in row " + std::to_string(rows + 1));
      }
      values.push_back(v);
    }
    ++rows;
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(header.size()));
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

std::string strip_prefix(const std::string& s) {
  const std::string ext = ".json";
  if (s.size() > ext.size() && s.compare(s.size() - ext.size(), ext.size(), ext) == 0) {
    return s.substr(0, s.size() - ext.size());
  }
  return s;
}

}  // namespace

void save_table(const TableBundle& bundle, const std::string& prefix) {
  const auto& t = bundle.table;
  t.check();
  write_matrix_csv(prefix + ".X.csv", t.feature_names, t.X);
  write_matrix_csv(prefix + ".Y.csv", t.target_names, t.Y);
  json sidecar{{"format", "delaycast-feature-table"},
               {"version", 1},
               {"rows", t.rows()},
               {"target_mode", std::string(to_string(t.mode))},
               {"feature_names", t.feature_names},
               {"target_names", t.target_names},
               {"codebook", bundle.codebook.to_json()},
               {"timestamps", t.timestamps}};
  sidecar["standardizer"] =
      bundle.standardizer ? bundle.standardizer->to_json() : json(nullptr);
  std::ofstream out(prefix + ".json", std::ios::binary);
  if (!out) throw Error("io", "cannot open " + prefix + ".json for writing");
  out << sidecar.dump(1) << '\n';
}

TableBundle load_table(const std::string& prefix_or_sidecar) {
  const std::string prefix = strip_prefix(prefix_or_sidecar);
  std::ifstream in(prefix + ".json", std::ios::binary);
  if (!in) throw Error("io", "cannot open " + prefix + ".json");
  json sidecar;
  try {
    sidecar = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(prefix + ".json: " + e.what());
  }
  if (sidecar.value("format", "") != "delaycast-feature-table") {
    throw SchemaError(prefix + ".json is not a feature table sidecar");
  }
  TableBundle b;
  auto& t = b.table;
  t.mode = parse_target_mode(sidecar.at("target_mode").get<std::string>());
  t.feature_names = sidecar.at("feature_names").get<std::vector<std::string>>();
  t.target_names = sidecar.at("target_names").get<std::vector<std::string>>();
  t.timestamps = sidecar.at("timestamps").get<std::vector<std::int64_t>>();
  b.codebook = LabelCodebook::from_json(sidecar.at("codebook"));
  if (!sidecar.at("standardizer").is_null()) {
    b.standardizer = Standardizer::from_json(sidecar.at("standardizer"));
  }
  t.X = read_matrix_csv(prefix + ".X.csv", t.feature_names);
  t.Y = read_matrix_csv(prefix + ".Y.csv", t.target_names);
  t.check();
  return b;
}

}  // namespace delaycast

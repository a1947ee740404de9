#include <sstream>

#include "doctest.h"

#include "delaycast/error.hpp"
#include "delaycast/schema.hpp"
#include "delaycast/synth.hpp"

using namespace delaycast;

namespace {

const char* kHeader =
    "FL_DATE,AIRLINE,ORIGIN,DEST,CANCELLED,DIVERTED,ARR_DELAY,"
    "DELAY_DUE_CARRIER,DELAY_DUE_WEATHER,DELAY_DUE_NAS,DELAY_DUE_SECURITY,"
    "DELAY_DUE_LATE_AIRCRAFT\n";

}  // namespace

TEST_CASE("hhmm parsing") {
  CHECK(parse_hhmm("1330").value == 810);
  CHECK(parse_hhmm("0000").value == 0);
  CHECK(parse_hhmm("2400").value == 1440);
  CHECK(parse_hhmm("930").value == 570);
  CHECK_THROWS_AS(parse_hhmm("2460"), ParseError);
  CHECK_THROWS_AS(parse_hhmm("2401"), ParseError);
  CHECK_THROWS_AS(parse_hhmm("12a4"), ParseError);
  CHECK_THROWS_AS(parse_hhmm("12"), ParseError);
  for (int m = 0; m <= 1440; m += 7) CHECK(parse_hhmm(format_hhmm({m})).value == m);
  CHECK(format_hhmm({1440}) == "2400");
}

TEST_CASE("date parsing") {
  using namespace std::chrono;
  CHECK(parse_date("2019-01-15") == year_month_day{year{2019}, month{1}, day{15}});
  CHECK(parse_date("2023-08-31") == year_month_day{year{2023}, month{8}, day{31}});
  CHECK(parse_date("2020-02-29") == year_month_day{year{2020}, month{2}, day{29}});
  CHECK_THROWS_AS(parse_date("2021-02-29"), ParseError);
  CHECK_THROWS_AS(parse_date("2021/02/01"), ParseError);
  CHECK(format_date(parse_date("2020-02-29")) == "2020-02-29");
}

TEST_CASE("csv reader on well-formed rows") {
  std::istringstream in(std::string(kHeader) +
                        "2023-01-01,AA,JFK,LAX,0,0,18,10,0,5,0,3\n"
                        "2023-01-02,DL,ATL,SEA,0,0,12,,,,,\n"
                        "2023-01-03,UA,ORD,SFO,0,0,30,30,0,0,0,0\n");
  const auto res = read_csv(in);
  CHECK(res.records.size() == 3);
  CHECK(res.diagnostics.empty());
  CHECK(res.records[0].has_all_components());
  CHECK(res.records[0].component_sum() == 18.0);
  CHECK(res.records[1].has_no_components());
  CHECK(res.records[1].arr_delay == 12.0);
}

TEST_CASE("csv reader reports bad rows and continues") {
  std::istringstream in(std::string(kHeader) +
                        "2023-01-01,AA,JFK,LAX,0,0,18,10,0,5,0,3\n"
                        "2023-01-02,DL,ATL,SEA,2,0,12,,,,,\n"
                        "2023-01-03,UA,ORD,SFO,0,0,30,30,0,0,0,0\n");
  const auto res = read_csv(in);
  CHECK(res.records.size() == 2);
  REQUIRE(res.diagnostics.size() == 1);
  CHECK(res.diagnostics[0].row == 2);
  CHECK(res.diagnostics[0].column == "CANCELLED");
  CHECK(res.diagnostics[0].to_string().find("row=2") == 0);
}

TEST_CASE("csv reader rejects negative components and wrong field counts") {
  std::istringstream in(std::string(kHeader) +
                        "2023-01-01,AA,JFK,LAX,0,0,18,-1,0,5,0,3\n"
                        "2023-01-01,AA,JFK,LAX,0,0\n");
  const auto res = read_csv(in);
  CHECK(res.records.empty());
  CHECK(res.diagnostics.size() == 2);
}

TEST_CASE("csv reader schema errors") {
  std::istringstream missing("FL_DATE,AIRLINE,ORIGIN\n2023-01-01,AA,JFK\n");
  try {
    read_csv(missing);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("DEST") != std::string::npos);
  }
  std::istringstream empty("");
  CHECK_THROWS_AS(read_csv(empty), SchemaError);
}

TEST_CASE("header aliases") {
  auto map = default_header_map();
  map.emplace("Date", Column::FlDate);
  std::istringstream in("Date,AIRLINE,ORIGIN,DEST,CANCELLED,DIVERTED\n2023-05-06,AA,JFK,LAX,0,1\n");
  const auto res = read_csv(in, map);
  REQUIRE(res.records.size() == 1);
  CHECK(res.records[0].diverted);
}

TEST_CASE("csv writer") {
  std::ostringstream empty;
  CHECK(write_csv({}, empty) == 0);
  const std::string header = empty.str();
  CHECK(std::count(header.begin(), header.end(), '\n') == 1);

  SynthConfig cfg;
  cfg.count = 100;
  cfg.seed = 3;
  cfg.cancel_rate = 0.1;
  cfg.missing_rate = 0.2;
  const auto synth = generate(cfg);

  std::ostringstream one;
  CHECK(write_csv(std::span(synth.records).first(1), one) == 1);
  const std::string s = one.str();
  CHECK(std::count(s.begin(), s.end(), '\n') == 2);

  std::ostringstream out;
  write_csv(synth.records, out);
  std::istringstream in(out.str());
  const auto back = read_csv(in);
  CHECK(back.diagnostics.empty());
  REQUIRE(back.records.size() == synth.records.size());
  for (std::size_t i = 0; i < back.records.size(); ++i) CHECK(back.records[i] == synth.records[i]);
}

TEST_CASE("record invariants") {
  FlightRecord r;
  r.fl_date = parse_date("2023-01-01");
  CHECK_FALSE(check_record(r).has_value());
  r.components[2] = -1.0;
  CHECK(check_record(r).has_value());
  r.components[2] = 1.0;
  r.dep_time = ClockMinutes{1500};
  CHECK(check_record(r).has_value());
}

#include "doctest.h"

#include <cmath>
#include <sstream>

#include "nhmm/error.hpp"
#include "nhmm/generative.hpp"
#include "nhmm/io.hpp"
#include "test_support.hpp"

using namespace nhmm;

namespace {

template <class F>
InputError input_error(F&& f) {
  try {
    f();
  } catch (const InputError& e) {
    return e;
  }
  FAIL("expected InputError");
  return InputError("");
}

DemandTable read_demand(const std::string& text) {
  std::istringstream in(text);
  return read_demand_csv(in);
}

HolidayCalendar read_holidays(const std::string& text) {
  std::istringstream in(text);
  return read_holidays_csv(in);
}

}  // namespace

TEST_CASE("simulate, write, read and filter gives the in-memory likelihood exactly") {
  const SyntheticInputs in = synthetic_inputs(std::chrono::sys_days{std::chrono::year{2019} / 1 / 1}, 400, 3);
  const ModelParams truth = reference_truth(2, 3);
  const SimulationOutput sim = simulate(truth, in.cov, 21ull);

  DemandTable table;
  table.dates = in.dates;
  table.cwv = in.cwv;
  for (const Vec2& y : sim.log_demand) table.demand.push_back({std::exp(y.x1), std::exp(y.x2)});

  std::stringstream demand_file, holiday_file;
  write_demand_csv(demand_file, table);
  write_holidays_csv(holiday_file, in.calendar);
  const DemandTable back = read_demand_csv(demand_file);
  const HolidayCalendar cal_back = read_holidays_csv(holiday_file);

  REQUIRE(back.size() == table.size());
  bool identical = back.dates == table.dates;
  for (std::size_t t = 0; t < table.size(); ++t) {
    identical = identical && back.demand[t].x1 == table.demand[t].x1 && back.demand[t].x2 == table.demand[t].x2 &&
                back.cwv[t].x1 == table.cwv[t].x1 && back.cwv[t].x2 == table.cwv[t].x2;
  }
  CHECK(identical);
  REQUIRE(cal_back.entries().size() == in.calendar.entries().size());

  const ModelData mem = ModelData::make(table.log_demand(), build_covariates(table.dates, table.cwv, in.calendar, in.baseline), 3);
  const ModelData disk = ModelData::make(back.log_demand(), build_covariates(back.dates, back.cwv, cal_back, in.baseline), 3);
  const double a = forward_filter(mem, truth).log_likelihood;
  CHECK(std::isfinite(a));
  CHECK(forward_filter(disk, truth).log_likelihood == a);
}

TEST_CASE("demand CSV diagnostics name the row and column") {
  const std::string header = "date,y1,y2,w1,w2\n";
  CHECK(read_demand(header + "2020-01-01,1,2,3,4\n2020-01-02,5,6,7,8\n").size() == 2);
  CHECK(read_demand("w2,w1,y2,y1,date\n4,3,2,1,2020-01-01\n").demand[0].x1 == 1.0);

  auto e = input_error([&] { read_demand(header + "2020-01-01,1,2,3,4\n2020-01-02,5,abc,7,8\n"); });
  CHECK(e.row() == 3);
  CHECK(e.column() == "y2");

  e = input_error([&] { read_demand(header + "2020-01-01,0,2,3,4\n"); });
  CHECK(e.row() == 2);
  CHECK(e.column() == "y1");
  e = input_error([&] { read_demand(header + "2020-01-01,1,-2,3,4\n"); });
  CHECK(e.column() == "y2");

  e = input_error([&] { read_demand(header + "2020-01-01,1,2,3,4\n2020-01-03,1,2,3,4\n"); });
  CHECK(e.row() == 3);
  CHECK(e.column() == "date");

  e = input_error([&] { read_demand(header + "2020-01-01,1,2,3\n"); });
  CHECK(e.row() == 2);

  e = input_error([&] { read_demand("date,y1,y2,w1\n2020-01-01,1,2,3\n"); });
  CHECK(e.row() == 1);
  CHECK(e.column() == "w2");

  e = input_error([&] { read_demand(header + "01/02/2020,1,2,3,4\n"); });
  CHECK(e.column() == "date");
  e = input_error([&] { read_demand(header + "2020-01-01,1,2,nan,4\n"); });
  CHECK(e.column() == "w1");
  CHECK_THROWS_AS(read_demand(""), InputError);
  CHECK_THROWS_AS(read_demand(header), InputError);
}

TEST_CASE("holiday CSV") {
  const HolidayCalendar c = read_holidays("date,type\n2020-04-10,1\n2020-05-08,2\r\n\n2020-12-25,3\n");
  REQUIRE(c.entries().size() == 3);
  CHECK(c.entries()[0].type == HolidayType::Easter);
  CHECK(c.entries()[2].type == HolidayType::Christmas);

  auto e = input_error([] { read_holidays("date,type\n2020-04-10,4\n"); });
  CHECK(e.row() == 2);
  CHECK(e.column() == "type");
  e = input_error([] { read_holidays("date,type\n2020-04-10,1\n2020-04-10,2\n"); });
  CHECK(e.row() == 3);
  e = input_error([] { read_holidays("type\n1\n"); });
  CHECK(e.column() == "date");
}

TEST_CASE("future CWV CSV") {
  std::istringstream in("date,w1,w2\n2020-01-01,1.5,2.5\n2020-01-02,3,4\n");
  const DemandTable t = read_cwv_csv(in);
  CHECK(t.size() == 2);
  CHECK(t.demand.empty());
  CHECK(t.cwv[1].x2 == 4.0);
}

TEST_CASE("smoothed state CSV skips day 0") {
  SmoothedStates s;
  s.probs = {{0.1, 0.0, 0.2, 0.7}, {0.0, 1.0, 0.0, 0.0}, {0.25, 0.0, 0.25, 0.5}};
  const std::vector<Date> dates{nhmm::test::day0() + std::chrono::days{1}, nhmm::test::day0() + std::chrono::days{2}};
  std::ostringstream out;
  write_smoothed_csv(out, dates, s);
  CHECK(out.str() == "date,p_state1,p_state2,p_state3,p_state4\n2021-03-02,0,1,0,0\n2021-03-03,0.25,0,0.25,0.5\n");
}

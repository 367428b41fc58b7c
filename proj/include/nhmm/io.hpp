#pragma once

// CSV ingestion and output for holidays, demand/weather series and smoothed states.
// Readers throw InputError carrying the 1-based file row and the offending column.

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "nhmm/calendar.hpp"
#include "nhmm/inference.hpp"

namespace nhmm {

/// Raw daily demand (strictly positive) and CWV per region, on contiguous dates.
struct DemandTable {
  std::vector<Date> dates;
  std::vector<Vec2> demand;
  std::vector<Vec2> cwv;

  std::size_t size() const { return dates.size(); }
  std::vector<Vec2> log_demand() const;
};

/// Columns `date,type` with type 1 (Easter), 2 (other) or 3 (Christmas/New Year).
HolidayCalendar read_holidays_csv(std::istream& in);
void write_holidays_csv(std::ostream& out, const HolidayCalendar& calendar);

/// Columns `date,y1,y2,w1,w2`. Zero or negative demand is an error.
DemandTable read_demand_csv(std::istream& in);
/// Values at %.17g so that reading back reproduces every double.
void write_demand_csv(std::ostream& out, const DemandTable& table);

/// Columns `date,w1,w2`: CWV for forecast days.
DemandTable read_cwv_csv(std::istream& in);

/// Header and string cells of an arbitrary CSV, for tools that post-process our own outputs.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws InputError if absent.
  std::size_t column(const std::string& name) const;
};
CsvTable read_csv_table(std::istream& in);

/// `date,p_state1..p_state4` for days 1..T; `probs` may carry day 0 in front, which is skipped.
void write_smoothed_csv(std::ostream& out, const std::vector<Date>& dates, const SmoothedStates& smoothed);

}  // namespace nhmm

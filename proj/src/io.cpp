#include "nhmm/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "nhmm/error.hpp"

namespace nhmm {

namespace {

std::vector<std::string> split_row(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

/// Header lookup plus row iteration with row numbers that match the file (header is row 1).
class CsvReader {
 public:
  CsvReader(std::istream& in, std::vector<std::string> required, const char* what) : in_(in) {
    std::string line;
    if (!std::getline(in_, line)) throw InputError(std::string(what) + " file is empty", 1);
    header_ = split_row(line);
    for (const auto& name : required) {
      std::size_t i = 0;
      while (i < header_.size() && header_[i] != name) ++i;
      if (i == header_.size()) throw InputError(std::string(what) + " header lacks column '" + name + "'", 1, name);
      index_[name] = i;
    }
  }

  bool next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++row_;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      cells_ = split_row(line);
      if (cells_.size() != header_.size()) {
        throw InputError("row " + std::to_string(row_) + ": expected " + std::to_string(header_.size()) + " columns, got " +
                             std::to_string(cells_.size()),
                         row_);
      }
      return true;
    }
    return false;
  }

  long row() const { return row_; }
  const std::string& cell(const std::string& name) const { return cells_[index_.at(name)]; }

  double number(const std::string& name) const {
    const std::string& s = cell(name);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) fail(name, "'" + s + "' is not a finite number");
    return v;
  }

  Date date() const {
    try {
      return parse_date(cell("date"));
    } catch (const InputError&) {
      fail("date", "'" + cell("date") + "' is not a YYYY-MM-DD date");
    }
  }

  [[noreturn]] void fail(const std::string& column, const std::string& msg) const {
    throw InputError("row " + std::to_string(row_) + ", column " + column + ": " + msg, row_, column);
  }

 private:
  std::istream& in_;
  std::vector<std::string> header_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::string> cells_;
  long row_ = 1;
};

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_contiguous(const CsvReader& r, const std::vector<Date>& dates) {
  if (dates.size() >= 2 && dates.back() != dates[dates.size() - 2] + std::chrono::days{1})
    r.fail("date", "dates must be consecutive days (previous row was " + format_date(dates[dates.size() - 2]) + ")");
}

}  // namespace

std::vector<Vec2> DemandTable::log_demand() const {
  std::vector<Vec2> out(demand.size());
  for (std::size_t t = 0; t < demand.size(); ++t) out[t] = {std::log(demand[t].x1), std::log(demand[t].x2)};
  return out;
}

HolidayCalendar read_holidays_csv(std::istream& in) {
  CsvReader r(in, {"date", "type"}, "holiday");
  std::vector<Holiday> entries;
  while (r.next()) {
    const Date d = r.date();
    const std::string& t = r.cell("type");
    if (t != "1" && t != "2" && t != "3") r.fail("type", "holiday type must be 1, 2 or 3, got '" + t + "'");
    if (!entries.empty() && d <= entries.back().date) r.fail("date", "holiday dates must be strictly increasing");
    entries.push_back({d, static_cast<HolidayType>(t[0] - '0')});
  }
  return HolidayCalendar(std::move(entries));
}

void write_holidays_csv(std::ostream& out, const HolidayCalendar& calendar) {
  out << "date,type\n";
  for (const Holiday& h : calendar.entries()) out << format_date(h.date) << ',' << static_cast<int>(h.type) << '\n';
}

DemandTable read_demand_csv(std::istream& in) {
  CsvReader r(in, {"date", "y1", "y2", "w1", "w2"}, "demand");
  DemandTable t;
  while (r.next()) {
    t.dates.push_back(r.date());
    check_contiguous(r, t.dates);
    const double y1 = r.number("y1"), y2 = r.number("y2");
    if (!(y1 > 0.0)) r.fail("y1", "demand must be positive");
    if (!(y2 > 0.0)) r.fail("y2", "demand must be positive");
    t.demand.push_back({y1, y2});
    t.cwv.push_back({r.number("w1"), r.number("w2")});
  }
  if (t.dates.empty()) throw InputError("demand file has no data rows", 1);
  return t;
}

void write_demand_csv(std::ostream& out, const DemandTable& table) {
  out << "date,y1,y2,w1,w2\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << format_date(table.dates[i]) << ',' << fmt17(table.demand[i].x1) << ',' << fmt17(table.demand[i].x2) << ','
        << fmt17(table.cwv[i].x1) << ',' << fmt17(table.cwv[i].x2) << '\n';
  }
}

DemandTable read_cwv_csv(std::istream& in) {
  CsvReader r(in, {"date", "w1", "w2"}, "CWV");
  DemandTable t;
  while (r.next()) {
    t.dates.push_back(r.date());
    check_contiguous(r, t.dates);
    t.cwv.push_back({r.number("w1"), r.number("w2")});
  }
  if (t.dates.empty()) throw InputError("CWV file has no data rows", 1);
  return t;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw InputError("CSV header lacks column '" + name + "'", 1, name);
}

CsvTable read_csv_table(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw InputError("CSV file is empty", 1);
  t.header = split_row(line);
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    t.rows.push_back(split_row(line));
    if (t.rows.back().size() != t.header.size()) throw InputError("row " + std::to_string(row) + ": wrong number of columns", row);
  }
  return t;
}

void write_smoothed_csv(std::ostream& out, const std::vector<Date>& dates, const SmoothedStates& smoothed) {
  if (smoothed.size() != dates.size() && smoothed.size() != dates.size() + 1)
    throw std::invalid_argument("smoothed states and dates differ in length");
  const std::size_t skip = smoothed.size() - dates.size();
  out << "date,p_state1,p_state2,p_state3,p_state4\n";
  char buf[32];
  for (std::size_t t = 0; t < dates.size(); ++t) {
    out << format_date(dates[t]);
    for (double p : smoothed.probs[t + skip]) {
      std::snprintf(buf, sizeof buf, ",%.10g", p);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace nhmm

#include "nhmm/calendar.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "nhmm/error.hpp"

namespace nhmm {

namespace chr = std::chrono;

namespace {

int parse_int(std::string_view s, std::string_view whole) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InputError("invalid date '" + std::string(whole) + "' (expected YYYY-MM-DD)");
  }
  return v;
}

}  // namespace

Date parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw InputError("invalid date '" + std::string(text) + "' (expected YYYY-MM-DD)");
  }
  const int y = parse_int(text.substr(0, 4), text);
  const int m = parse_int(text.substr(5, 2), text);
  const int d = parse_int(text.substr(8, 2), text);
  const chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(m)},
                                chr::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw InputError("invalid date '" + std::string(text) + "'");
  return Date{ymd};
}

std::string format_date(Date d) {
  const chr::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int day_of_year_slot(Date d) {
  const chr::year_month_day ymd{d};
  const Date jan1{chr::year_month_day{ymd.year(), chr::January, chr::day{1}}};
  const int doy = static_cast<int>((d - jan1).count()) + 1;
  if (!ymd.year().is_leap() && doy >= 60) return doy + 1;
  return doy;
}

HolidayCalendar::HolidayCalendar(std::vector<Holiday> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const int type = static_cast<int>(entries_[i].type);
    if (type < 1 || type > 3) {
      throw InputError("holiday type must be 1, 2 or 3", static_cast<long>(i) + 1, "type");
    }
    if (i > 0 && entries_[i].date <= entries_[i - 1].date) {
      throw InputError("holiday dates must be strictly increasing (" + format_date(entries_[i].date) + ")",
                       static_cast<long>(i) + 1, "date");
    }
  }
}

bool HolidayCalendar::is_holiday(Date d) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), d,
                             [](const Holiday& h, Date x) { return h.date < x; });
  return it != entries_.end() && it->date == d;
}

CalendarPosition calendar_position(const HolidayCalendar& calendar, Date day) {
  const auto& hs = calendar.entries();
  auto next = std::lower_bound(hs.begin(), hs.end(), day, [](const Holiday& h, Date x) { return h.date < x; });
  if (next == hs.end()) {
    throw InputError("holiday calendar has no holiday on or after " + format_date(day));
  }
  if (next->date == day) return {0, 0, next->type};
  if (next == hs.begin()) {
    throw InputError("holiday calendar has no holiday on or before " + format_date(day));
  }
  auto prev = std::prev(next);
  CalendarPosition pos;
  pos.n = static_cast<int>((next->date - day).count());
  pos.p = static_cast<int>((day - prev->date).count());
  // Ties go to the later holiday.
  pos.r = pos.p < pos.n ? prev->type : next->type;
  return pos;
}

CovariateSeries build_covariates(Date first_day, std::span<const Vec2> cwv, const HolidayCalendar& calendar,
                                 const SeasonalCwvBaseline& baseline, CovariateOptions options) {
  if (cwv.empty()) throw InputError("no data days");
  const Date epoch = options.epoch.value_or(first_day);
  CovariateSeries out;
  out.initial = calendar_position(calendar, first_day - chr::days{1});
  out.days.reserve(cwv.size());
  for (std::size_t i = 0; i < cwv.size(); ++i) {
    const Date d = first_day + chr::days{static_cast<int>(i)};
    const Vec2 w = cwv[i];
    if (!std::isfinite(w.x1) || !std::isfinite(w.x2)) {
      throw InputError("missing or non-finite CWV on " + format_date(d), static_cast<long>(i) + 1, "w");
    }
    const CalendarPosition pos = calendar_position(calendar, d);
    DayCovariates day;
    day.date = d;
    day.n = pos.n;
    day.p = pos.p;
    day.r = pos.r;
    day.w = w;
    day.day_of_year = day_of_year_slot(d);
    day.w_tilde = {w.x1 - baseline.at(day.day_of_year, 0), w.x2 - baseline.at(day.day_of_year, 1)};
    day.t_index = static_cast<long>((d - epoch).count()) + 1;
    out.days.push_back(day);
  }
  return out;
}

CovariateSeries build_covariates(std::span<const Date> dates, std::span<const Vec2> cwv,
                                 const HolidayCalendar& calendar, const SeasonalCwvBaseline& baseline,
                                 CovariateOptions options) {
  if (dates.size() != cwv.size()) throw InputError("date and CWV series differ in length");
  if (dates.empty()) throw InputError("no data days");
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if ((dates[i] - dates[i - 1]).count() != 1) {
      throw InputError("dates are not contiguous at " + format_date(dates[i]), static_cast<long>(i) + 1, "date");
    }
  }
  return build_covariates(dates.front(), cwv, calendar, baseline, options);
}

SeasonalCwvBaseline smooth_cwv_baseline(std::span<const Date> dates, std::span<const Vec2> cwv,
                                        int window_halfwidth) {
  if (dates.empty()) throw InputError("empty CWV history");
  if (dates.size() != cwv.size()) throw InputError("date and CWV history differ in length");
  if (window_halfwidth < 0) throw InputError("baseline window half-width must be non-negative");
  if (dates.size() < 365) throw InputError("CWV baseline needs at least one full year of history");

  std::array<std::array<double, 2>, 366> sum{};
  std::array<int, 366> count{};
  auto add = [&](int slot, Vec2 w) {
    const auto s = static_cast<std::size_t>(slot - 1);
    sum[s][0] += w.x1;
    sum[s][1] += w.x2;
    ++count[s];
  };
  for (std::size_t i = 0; i < dates.size(); ++i) {
    add(day_of_year_slot(dates[i]), cwv[i]);
    // Feb 28 of a non-leap year followed by Mar 1: the pair fills the missing slot 60.
    const chr::year_month_day ymd{dates[i]};
    if (!ymd.year().is_leap() && ymd.month() == chr::February && ymd.day() == chr::day{28} &&
        i + 1 < dates.size() && (dates[i + 1] - dates[i]).count() == 1) {
      add(60, 0.5 * (cwv[i] + cwv[i + 1]));
    }
  }

  std::array<std::array<double, 2>, 366> raw{};
  for (std::size_t s = 0; s < 366; ++s) {
    if (count[s] == 0) {
      throw InputError("CWV history has no observation for day-of-year slot " + std::to_string(s + 1));
    }
    raw[s][0] = sum[s][0] / count[s];
    raw[s][1] = sum[s][1] / count[s];
  }

  SeasonalCwvBaseline out;
  const int width = 2 * window_halfwidth + 1;
  for (int s = 0; s < 366; ++s) {
    double acc0 = 0.0, acc1 = 0.0;
    for (int k = -window_halfwidth; k <= window_halfwidth; ++k) {
      const int idx = ((s + k) % 366 + 366) % 366;
      acc0 += raw[static_cast<std::size_t>(idx)][0];
      acc1 += raw[static_cast<std::size_t>(idx)][1];
    }
    out.m[static_cast<std::size_t>(s)] = {acc0 / width, acc1 / width};
  }
  return out;
}

}  // namespace nhmm

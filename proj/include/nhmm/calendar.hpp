#pragma once

// Calendar covariates: days to/since public holidays, holiday type, centred CWV.

#include <array>
#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nhmm/linalg2.hpp"

namespace nhmm {

using Date = std::chrono::sys_days;

/// Parses YYYY-MM-DD. Throws InputError on anything else.
Date parse_date(std::string_view text);
std::string format_date(Date d);

/// Slot in 1..366 where Feb 29 is always 60 and Mar 1 always 61.
int day_of_year_slot(Date d);

enum class HolidayType : int { Easter = 1, Other = 2, Christmas = 3 };

struct Holiday {
  Date date;
  HolidayType type;
};

/// Observed public holidays, strictly increasing by date.
class HolidayCalendar {
 public:
  HolidayCalendar() = default;
  /// Validates ordering and uniqueness; throws InputError.
  explicit HolidayCalendar(std::vector<Holiday> entries);

  const std::vector<Holiday>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  bool is_holiday(Date d) const;

 private:
  std::vector<Holiday> entries_;
};

/// Calendar position of a single day relative to the holidays around it.
struct CalendarPosition {
  int n = 0;  // days to the next holiday
  int p = 0;  // days since the previous holiday
  HolidayType r = HolidayType::Other;

  bool holiday() const { return n == 0 && p == 0; }
};

struct DayCovariates {
  Date date{};
  int n = 0;
  int p = 0;
  HolidayType r = HolidayType::Other;
  Vec2 w;        // raw CWV per region
  Vec2 w_tilde;  // CWV minus the seasonal baseline
  int day_of_year = 1;
  long t_index = 0;  // argument of the Fourier terms

  bool holiday() const { return n == 0 && p == 0; }
  int region_type() const { return static_cast<int>(r); }
};

/// Covariates for days 1..T plus the calendar position of day 0 (no weather needed there).
struct CovariateSeries {
  CalendarPosition initial;
  std::vector<DayCovariates> days;

  std::size_t size() const { return days.size(); }
  const DayCovariates& operator[](std::size_t t) const { return days[t]; }
};

/// Smoothed day-of-year CWV means m_{d,j}; index 0 is slot 1.
struct SeasonalCwvBaseline {
  std::array<std::array<double, 2>, 366> m{};

  double at(int slot, int region) const { return m[static_cast<std::size_t>(slot - 1)][static_cast<std::size_t>(region)]; }
};

/// Position of `day` relative to `calendar`; throws InputError if no holiday on both sides.
CalendarPosition calendar_position(const HolidayCalendar& calendar, Date day);

struct CovariateOptions {
  /// Date with t_index 1. Defaults to the first data day.
  std::optional<Date> epoch;
};

/// Builds covariates for the contiguous range starting at `first_day`, one entry per CWV row.
CovariateSeries build_covariates(Date first_day, std::span<const Vec2> cwv, const HolidayCalendar& calendar,
                                 const SeasonalCwvBaseline& baseline, CovariateOptions options = {});

/// Same as above but checks the explicit date list is contiguous.
CovariateSeries build_covariates(std::span<const Date> dates, std::span<const Vec2> cwv,
                                 const HolidayCalendar& calendar, const SeasonalCwvBaseline& baseline,
                                 CovariateOptions options = {});

/// Per-slot mean of the history followed by a circular moving average of half-width `window_halfwidth`.
/// Non-leap years feed slot 60 with the mean of their Feb 28 and Mar 1 values.
SeasonalCwvBaseline smooth_cwv_baseline(std::span<const Date> dates, std::span<const Vec2> cwv,
                                        int window_halfwidth = 10);

}  // namespace nhmm

#pragma once

#include <compare>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>

namespace deepair::grid {

// Whole hours since 1970-01-01T00:00 UTC.
struct HourStamp {
  std::int64_t hours = 0;
  auto operator<=>(const HourStamp&) const = default;
  HourStamp operator+(std::int64_t h) const { return {hours + h}; }
};

// Minutes since the epoch; accepts "YYYY-MM-DDTHH", "YYYY-MM-DDTHH:MM" and
// "YYYY-MM-DDTHH:MM:SS", optionally suffixed with 'Z'. A space may replace T.
std::int64_t parse_iso_minutes(std::string_view text);
HourStamp parse_hour(std::string_view text);  // floors to the hour
HourStamp hour_from_minutes(std::int64_t minutes);
std::string format_hour(HourStamp hour);        // "YYYY-MM-DDTHH:00"
HourStamp make_hour(int year, unsigned month, unsigned day, int hour);

enum class Season { winter = 0, spring = 1, summer = 2, autumn = 3 };

std::string_view season_name(Season s);
// March-May spring, June-August summer, September-November autumn,
// December-February winter.
Season season_of_month(unsigned month);
unsigned month_of(HourStamp hour);

// Maps hours to season and workday labels. Saturdays, Sundays and any listed
// holiday (day index since the epoch) are non-workdays.
class Calendar {
 public:
  Season season(HourStamp hour) const { return season_of_month(month_of(hour)); }
  bool workday(HourStamp hour) const;
  void add_holiday(int year, unsigned month, unsigned day);

 private:
  std::set<std::int64_t> holidays_;
};

// Encoded constant-field values used by the time channels.
double season_code(Season s);  // winter 0, spring 1/3, summer 2/3, autumn 1
inline double workday_code(bool workday) { return workday ? 1.0 : 0.0; }

}  // namespace deepair::grid

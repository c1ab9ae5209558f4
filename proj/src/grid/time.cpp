#include "deepair/grid/time.hpp"

#include <chrono>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace deepair::grid {
namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) throw std::invalid_argument("invalid calendar date");
  return sys_days{ymd}.time_since_epoch().count();
}

int read_int(std::string_view s, std::size_t pos, std::size_t len, std::string_view whole) {
  if (pos + len > s.size()) throw std::invalid_argument("malformed timestamp '" + std::string(whole) + "'");
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("malformed timestamp '" + std::string(whole) + "'");
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

}  // namespace

std::int64_t parse_iso_minutes(std::string_view text) {
  std::string_view s = text;
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
  if (s.size() < 13 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ')) {
    throw std::invalid_argument("malformed timestamp '" + std::string(text) + "'");
  }
  const int y = read_int(s, 0, 4, text);
  const int mo = read_int(s, 5, 2, text);
  const int d = read_int(s, 8, 2, text);
  const int h = read_int(s, 11, 2, text);
  int mi = 0;
  if (s.size() > 13) {
    if (s[13] != ':') throw std::invalid_argument("malformed timestamp '" + std::string(text) + "'");
    mi = read_int(s, 14, 2, text);
    if (s.size() > 16) {
      if (s[16] != ':' || s.size() != 19) throw std::invalid_argument("malformed timestamp '" + std::string(text) + "'");
      read_int(s, 17, 2, text);
    }
  }
  if (h > 23 || mi > 59) throw std::invalid_argument("malformed timestamp '" + std::string(text) + "'");
  std::int64_t days = 0;
  try {
    days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("invalid date in timestamp '" + std::string(text) + "'");
  }
  return (days * 24 + h) * 60 + mi;
}

HourStamp hour_from_minutes(std::int64_t minutes) { return {floor_div(minutes, 60)}; }

HourStamp parse_hour(std::string_view text) { return hour_from_minutes(parse_iso_minutes(text)); }

HourStamp make_hour(int year, unsigned month, unsigned day, int hour) {
  return {days_from_civil(year, month, day) * 24 + hour};
}

std::string format_hour(HourStamp hour) {
  using namespace std::chrono;
  const std::int64_t days = floor_div(hour.hours, 24);
  const int h = static_cast<int>(hour.hours - days * 24);
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), h);
  return buf;
}

std::string_view season_name(Season s) {
  switch (s) {
    case Season::winter: return "winter";
    case Season::spring: return "spring";
    case Season::summer: return "summer";
    case Season::autumn: return "autumn";
  }
  return "?";
}

Season season_of_month(unsigned month) {
  if (month >= 3 && month <= 5) return Season::spring;
  if (month >= 6 && month <= 8) return Season::summer;
  if (month >= 9 && month <= 11) return Season::autumn;
  return Season::winter;
}

unsigned month_of(HourStamp hour) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{std::chrono::days{floor_div(hour.hours, 24)}}};
  return static_cast<unsigned>(ymd.month());
}

bool Calendar::workday(HourStamp hour) const {
  using namespace std::chrono;
  const std::int64_t day_index = floor_div(hour.hours, 24);
  if (holidays_.count(day_index)) return false;
  const weekday wd{sys_days{std::chrono::days{day_index}}};
  return wd != Saturday && wd != Sunday;
}

void Calendar::add_holiday(int year, unsigned month, unsigned day) {
  holidays_.insert(days_from_civil(year, month, day));
}

double season_code(Season s) {
  switch (s) {
    case Season::winter: return 0.0;
    case Season::spring: return 1.0 / 3.0;
    case Season::summer: return 2.0 / 3.0;
    case Season::autumn: return 1.0;
  }
  return 0.0;
}

}  // namespace deepair::grid

#include "flarepp/time_util.hpp"

#include <chrono>
#include <cstdio>
#include <stdexcept>

namespace flarepp {

namespace {

namespace chr = std::chrono;

chr::sys_seconds to_sys(UnixTime t) { return chr::sys_seconds{chr::seconds{t}}; }

chr::year_month_day civil_date(UnixTime t) {
  return chr::year_month_day{chr::floor<chr::days>(to_sys(t))};
}

}  // namespace

UnixTime make_utc(int year, unsigned month, unsigned day, unsigned hour, unsigned minute,
                  unsigned second) {
  const chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) {
    throw std::invalid_argument("invalid calendar date/time");
  }
  const auto days = chr::sys_days{ymd}.time_since_epoch();
  return chr::duration_cast<chr::seconds>(days).count() + hour * kHour + minute * 60 + second;
}

unsigned utc_month(UnixTime t) { return static_cast<unsigned>(civil_date(t).month()); }

int utc_year(UnixTime t) { return static_cast<int>(civil_date(t).year()); }

std::string format_iso8601(UnixTime t) {
  const auto ymd = civil_date(t);
  const auto day_start = chr::sys_days{ymd};
  const auto tod = to_sys(t) - chr::sys_seconds{day_start};
  const long long secs = tod.count();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), secs / 3600,
                (secs / 60) % 60, secs % 60);
  return buf;
}

UnixTime parse_iso8601(std::string_view text) {
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char tail = 0;
  const std::string buf(text);
  const int n = std::sscanf(buf.c_str(), "%4d-%2u-%2uT%2u:%2u:%2u%c", &y, &mo, &d, &h, &mi, &s, &tail);
  if (n < 6 || (n == 7 && tail != 'Z')) {
    throw std::invalid_argument("not an ISO-8601 UTC timestamp: '" + buf + "'");
  }
  return make_utc(y, mo, d, h, mi, s);
}

}  // namespace flarepp

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace flarepp {

// Seconds since 1970-01-01T00:00:00Z.
using UnixTime = std::int64_t;

inline constexpr UnixTime kHour = 3600;
inline constexpr UnixTime kDay = 24 * kHour;

UnixTime make_utc(int year, unsigned month, unsigned day, unsigned hour = 0, unsigned minute = 0,
                  unsigned second = 0);

// 1..12
unsigned utc_month(UnixTime t);
int utc_year(UnixTime t);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_iso8601(UnixTime t);
// Accepts the format above, with or without the trailing 'Z'.
UnixTime parse_iso8601(std::string_view text);

}  // namespace flarepp

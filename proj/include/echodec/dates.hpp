#pragma once

// Minimal proleptic-Gregorian date arithmetic for ISO-8601 day labels.
// Uses the days_from_civil / civil_from_days algorithms.

#include <echodec/types.hpp>

#include <cstdio>
#include <string>

namespace echodec {

/// Days since 1970-01-01 for a civil date.
inline long long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return era * 146097LL + static_cast<long long>(doe) - 719468LL;
}

/// Inverse of days_from_civil.
inline void civil_from_days(long long z, int& y, int& m, int& d) {
  z += 719468;
  const long long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long long yy = static_cast<long long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

/// Parses "YYYY-MM-DD"; throws DataError on malformed input.
inline long long parse_iso_date(const std::string& s) {
  int y = 0, m = 0, d = 0;
  char dash1 = 0, dash2 = 0;
  if (std::sscanf(s.c_str(), "%d%c%d%c%d", &y, &dash1, &m, &dash2, &d) != 5 ||
      dash1 != '-' || dash2 != '-' || m < 1 || m > 12 || d < 1 || d > 31) {
    throw DataError("malformed ISO date: '" + s + "'");
  }
  return days_from_civil(y, m, d);
}

/// Formats days-since-epoch as "YYYY-MM-DD".
inline std::string format_iso_date(long long days) {
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
  return buf;
}

/// date + n days, both as ISO strings.
inline std::string add_days(const std::string& iso, long long n) {
  return format_iso_date(parse_iso_date(iso) + n);
}

}  // namespace echodec

#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace oncosynth {

/// Calendar date with day precision.
using Date = std::chrono::sys_days;

/// Mean Gregorian year length; used wherever ages in years and day counts
/// are converted into each other.
inline constexpr double kDaysPerYear = 365.2425;

/// Parses YYYY-MM-DD. Throws DataError on anything else or on an invalid
/// calendar date (e.g. 2015-02-30).
Date parse_iso_date(std::string_view text);

std::string format_iso_date(Date date);

inline std::int64_t days_between(Date from, Date to) {
    return (to - from).count();
}

inline Date add_days(Date date, std::int64_t days) {
    return date + std::chrono::days{days};
}

/// Completed years of age at `on` for someone born on `birth`. A birthday
/// on Feb 29 counts as reached on Mar 1 in non-leap years.
int age_in_years(Date birth, Date on);

Date first_day_of_year(int year);
Date last_day_of_year(int year);

}  // namespace oncosynth

#include "oncosynth/dates.hpp"

#include <charconv>

#include <fmt/core.h>

#include "oncosynth/errors.hpp"

namespace oncosynth {

namespace {

int parse_digits(std::string_view text, std::string_view whole) {
    int value = 0;
    for (char c : text) {
        if (c < '0' || c > '9') {
            throw DataError("invalid date '" + std::string(whole) + "', expected YYYY-MM-DD");
        }
        value = value * 10 + (c - '0');
    }
    return value;
}

}  // namespace

Date parse_iso_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw DataError("invalid date '" + std::string(text) + "', expected YYYY-MM-DD");
    }
    const int y = parse_digits(text.substr(0, 4), text);
    const int m = parse_digits(text.substr(5, 2), text);
    const int d = parse_digits(text.substr(8, 2), text);
    const std::chrono::year_month_day ymd{std::chrono::year{y},
                                          std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) {
        throw DataError("invalid calendar date '" + std::string(text) + "'");
    }
    return Date{ymd};
}

std::string format_iso_date(Date date) {
    const std::chrono::year_month_day ymd{date};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

int age_in_years(Date birth, Date on) {
    const std::chrono::year_month_day b{birth};
    const std::chrono::year_month_day o{on};
    int age = static_cast<int>(o.year()) - static_cast<int>(b.year());
    const auto bm = static_cast<unsigned>(b.month());
    const auto bd = static_cast<unsigned>(b.day());
    const auto om = static_cast<unsigned>(o.month());
    const auto od = static_cast<unsigned>(o.day());
    if (om < bm || (om == bm && od < bd)) {
        --age;
    }
    return age;
}

Date first_day_of_year(int year) {
    return Date{std::chrono::year{year} / std::chrono::January / 1};
}

Date last_day_of_year(int year) {
    return Date{std::chrono::year{year} / std::chrono::December / 31};
}

}  // namespace oncosynth

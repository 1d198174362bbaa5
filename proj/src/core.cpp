#include "rankarb/core.hpp"

#include <charconv>
#include <cstdio>

namespace rankarb {

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::config:
        return 2;
    case ErrorKind::data:
    case ErrorKind::domain:
        return 3;
    case ErrorKind::degeneracy:
        return 4;
    }
    return 1;
}

namespace {

int parse_int(std::string_view s, std::string_view whole) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw DataError("invalid date '" + std::string(whole) + "'");
    }
    return v;
}

}  // namespace

Date Date::parse(std::string_view iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') {
        throw DataError("invalid date '" + std::string(iso) + "' (expected YYYY-MM-DD)");
    }
    Date d(parse_int(iso.substr(0, 4), iso), static_cast<unsigned>(parse_int(iso.substr(5, 2), iso)),
           static_cast<unsigned>(parse_int(iso.substr(8, 2), iso)));
    if (!d.ok()) {
        throw DataError("invalid date '" + std::string(iso) + "'");
    }
    return d;
}

Date Date::next_weekday() const {
    using namespace std::chrono;
    sys_days s{ymd_};
    do {
        s += days{1};
    } while (weekday{s} == Saturday || weekday{s} == Sunday);
    return Date(year_month_day{s});
}

std::string Date::str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year(), month(), day());
    return buf;
}

}  // namespace rankarb

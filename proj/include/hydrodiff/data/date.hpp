#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace hydrodiff::data {

/// Calendar date as days since 1970-01-01 (proleptic Gregorian).
class Date {
public:
    Date() = default;
    explicit Date(std::int64_t days_since_epoch) : days_(days_since_epoch) {}
    static Date from_ymd(int year, int month, int day);
    /// Parses "YYYY-MM-DD"; throws ParseError otherwise.
    static Date parse(const std::string& s);

    std::int64_t days() const { return days_; }
    void to_ymd(int& year, int& month, int& day) const;
    std::string str() const;

    /// 1-based day of year, 1..366.
    int day_of_year() const;

    Date operator+(std::int64_t n) const { return Date(days_ + n); }
    Date operator-(std::int64_t n) const { return Date(days_ - n); }
    std::int64_t operator-(Date o) const { return days_ - o.days_; }
    auto operator<=>(const Date&) const = default;

private:
    std::int64_t days_ = 0;
};

}  // namespace hydrodiff::data

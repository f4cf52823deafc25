#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <charconv>
#include <compare>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mfiv {

/// Exact rational used for line geometry (slopes, intercepts, breakpoints).
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// 128-bit accumulator for cross-multiplied comparisons of raw decimals.
using Wide = __int128;

class DecimalParseError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Fixed-point decimal with eight fractional digits.
///
/// Quotes, strikes and discount factors are held as scaled 64-bit integers so
/// that every membership predicate downstream can be evaluated exactly with
/// 128-bit cross products. The range is roughly +/-9.2e10.
class Decimal {
public:
    static constexpr int kDigits = 8;
    static constexpr std::int64_t kScale = 100'000'000;

    constexpr Decimal() = default;

    static constexpr Decimal from_raw(std::int64_t raw) {
        Decimal d;
        d.raw_ = raw;
        return d;
    }

    static constexpr Decimal from_int(std::int64_t units) { return from_raw(units * kScale); }

    /// Parses `[-]digits[.digits]`. More than eight fractional digits is an
    /// error rather than a silent rounding.
    static Decimal parse(std::string_view text) {
        auto fail = [&](const char* why) {
            throw DecimalParseError(std::string(why) + ": '" + std::string(text) + "'");
        };
        while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
        while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
            text.remove_suffix(1);
        if (text.empty()) fail("empty decimal");

        bool negative = false;
        if (text.front() == '-' || text.front() == '+') {
            negative = text.front() == '-';
            text.remove_prefix(1);
        }
        const auto dot = text.find('.');
        const std::string_view whole = text.substr(0, dot);
        const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
        if (whole.empty() && frac.empty()) fail("no digits in decimal");
        if (frac.size() > static_cast<std::size_t>(kDigits)) fail("more than 8 fractional digits");

        auto all_digits = [](std::string_view s) {
            for (char c : s)
                if (c < '0' || c > '9') return false;
            return true;
        };
        if (!all_digits(whole) || !all_digits(frac)) fail("non-numeric decimal");

        std::int64_t units = 0;
        if (!whole.empty()) {
            auto [ptr, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), units);
            if (ec != std::errc{} || ptr != whole.data() + whole.size()) fail("decimal out of range");
        }
        if (units > std::numeric_limits<std::int64_t>::max() / kScale - 1) fail("decimal out of range");

        std::int64_t fraction = 0;
        for (std::size_t k = 0; k < static_cast<std::size_t>(kDigits); ++k)
            fraction = fraction * 10 + (k < frac.size() ? frac[k] - '0' : 0);

        const std::int64_t raw = units * kScale + fraction;
        return from_raw(negative ? -raw : raw);
    }

    /// Largest decimal not above `value`.
    static Decimal floor_of(const Rational& value) { return from_rational(value, false); }
    /// Smallest decimal not below `value`.
    static Decimal ceil_of(const Rational& value) { return from_rational(value, true); }

    constexpr std::int64_t raw() const { return raw_; }
    Rational to_rational() const { return Rational(BigInt(raw_), BigInt(kScale)); }
    double to_double() const { return static_cast<double>(raw_) / static_cast<double>(kScale); }

    /// Canonical text: no trailing fractional zeros, no exponent.
    std::string to_string() const {
        const bool negative = raw_ < 0;
        const std::uint64_t mag = negative ? static_cast<std::uint64_t>(-(raw_ + 1)) + 1
                                           : static_cast<std::uint64_t>(raw_);
        std::string out = negative ? "-" : "";
        out += std::to_string(mag / kScale);
        std::uint64_t frac = mag % kScale;
        if (frac != 0) {
            std::string digits = std::to_string(frac);
            digits.insert(0, static_cast<std::size_t>(kDigits) - digits.size(), '0');
            while (digits.back() == '0') digits.pop_back();
            out += '.';
            out += digits;
        }
        return out;
    }

    constexpr bool is_zero() const { return raw_ == 0; }

    friend constexpr auto operator<=>(Decimal, Decimal) = default;
    friend constexpr Decimal operator+(Decimal a, Decimal b) { return from_raw(a.raw_ + b.raw_); }
    friend constexpr Decimal operator-(Decimal a, Decimal b) { return from_raw(a.raw_ - b.raw_); }
    friend constexpr Decimal operator-(Decimal a) { return from_raw(-a.raw_); }

    friend std::ostream& operator<<(std::ostream& os, Decimal d) { return os << d.to_string(); }

private:
    static Decimal from_rational(const Rational& value, bool ceiling) {
        const BigInt scaled_num = boost::multiprecision::numerator(value) * kScale;
        const BigInt den = boost::multiprecision::denominator(value);
        BigInt q = scaled_num / den;  // truncates toward zero
        const BigInt r = scaled_num - q * den;
        if (r != 0) {
            if (ceiling && scaled_num > 0) q += 1;
            if (!ceiling && scaled_num < 0) q -= 1;
        }
        if (q > std::numeric_limits<std::int64_t>::max() || q < std::numeric_limits<std::int64_t>::min())
            throw std::overflow_error("decimal out of range");
        return from_raw(q.convert_to<std::int64_t>());
    }

    std::int64_t raw_ = 0;
};

inline Wide wide(Decimal d) { return static_cast<Wide>(d.raw()); }

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace mfiv

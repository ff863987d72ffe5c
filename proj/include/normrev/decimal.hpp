#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

namespace normrev {

/// Exact fixed-point amount with six fractional digits.
///
/// Sanctions are money-like quantities that get summed into ledgers; keeping
/// them as scaled integers makes every total exact.
class decimal {
public:
    static constexpr int fraction_digits = 6;
    static constexpr std::int64_t scale = 1'000'000;

    constexpr decimal() = default;

    static constexpr decimal from_units(std::int64_t units) { return decimal{units * scale, raw_tag{}}; }
    static constexpr decimal from_raw(std::int64_t raw) { return decimal{raw, raw_tag{}}; }

    /// Parses `[-]digits[.digits]`; at most six fractional digits.
    static std::optional<decimal> parse(std::string_view text) {
        if (text.empty()) return std::nullopt;
        bool negative = false;
        std::size_t i = 0;
        if (text[0] == '-') {
            negative = true;
            i = 1;
        }
        std::int64_t whole = 0;
        std::size_t int_digits = 0;
        constexpr std::int64_t whole_limit = std::numeric_limits<std::int64_t>::max() / scale;
        for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i, ++int_digits) {
            whole = whole * 10 + (text[i] - '0');
            if (whole > whole_limit) return std::nullopt;
        }
        if (int_digits == 0) return std::nullopt;
        std::int64_t frac = 0;
        int frac_digits = 0;
        if (i < text.size() && text[i] == '.') {
            ++i;
            for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i) {
                if (++frac_digits > fraction_digits) return std::nullopt;
                frac = frac * 10 + (text[i] - '0');
            }
            if (frac_digits == 0) return std::nullopt;
        }
        if (i != text.size()) return std::nullopt;
        for (int k = frac_digits; k < fraction_digits; ++k) frac *= 10;
        std::int64_t raw = whole * scale + frac;
        return decimal{negative ? -raw : raw, raw_tag{}};
    }

    constexpr std::int64_t raw() const { return raw_; }
    double to_double() const { return static_cast<double>(raw_) / static_cast<double>(scale); }

    /// Shortest exact text: no trailing fractional zeros, no trailing dot.
    std::string str() const {
        std::int64_t v = raw_ < 0 ? -raw_ : raw_;
        std::string out = std::to_string(v / scale);
        std::int64_t frac = v % scale;
        if (frac != 0) {
            std::string digits = std::to_string(frac);
            digits.insert(0, fraction_digits - digits.size(), '0');
            while (digits.back() == '0') digits.pop_back();
            out += '.' + digits;
        }
        return raw_ < 0 ? "-" + out : out;
    }

    constexpr decimal& operator+=(decimal o) {
        raw_ += o.raw_;
        return *this;
    }
    friend constexpr decimal operator+(decimal a, decimal b) { return a += b; }
    friend constexpr decimal operator*(decimal a, std::int64_t k) { return decimal{a.raw_ * k, raw_tag{}}; }
    friend constexpr auto operator<=>(decimal, decimal) = default;

private:
    struct raw_tag {};
    constexpr decimal(std::int64_t raw, raw_tag) : raw_(raw) {}
    std::int64_t raw_ = 0;
};

} // namespace normrev

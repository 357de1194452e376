#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace atomscan {

using i128 = __int128;
using u128 = unsigned __int128;

std::string to_string(i128 v);

// Exact rational with a 128-bit numerator and a positive denominator,
// always kept in lowest terms.
class Rational {
public:
    Rational() = default;
    Rational(std::int64_t n) : num_(n), den_(1) {}  // NOLINT(google-explicit-constructor)
    Rational(i128 n, i128 d);

    static Rational from_i128(i128 n) { return Rational(n, 1); }

    // Accepts "3", "-7", "19.28", "2/3".
    static Rational parse(const std::string& text);

    i128 num() const { return num_; }
    i128 den() const { return den_; }

    Rational operator+(const Rational& o) const;
    Rational operator-(const Rational& o) const;
    Rational operator*(const Rational& o) const;
    Rational operator/(const Rational& o) const;
    Rational operator-() const { return Rational(-num_, den_); }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }

    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    std::strong_ordering operator<=>(const Rational& o) const;

    i128 floor() const;
    i128 ceil() const;
    // floor/ceil to a multiple of 1/scale (scale=100 gives two decimals).
    Rational floor_to(i128 scale) const;
    Rational ceil_to(i128 scale) const;

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
    // Fixed decimal, truncated toward zero.
    std::string to_decimal(int digits) const;
    // "n" when integral, else "n/d".
    std::string to_string() const;

private:
    i128 num_ = 0;
    i128 den_ = 1;
};

}  // namespace atomscan

#include "atomscan/rational.hpp"

#include <algorithm>
#include <cctype>

namespace atomscan {

namespace {

i128 abs128(i128 v) { return v < 0 ? -v : v; }

i128 gcd128(i128 a, i128 b) {
    a = abs128(a);
    b = abs128(b);
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

i128 floor_div(i128 a, i128 b) {
    i128 q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

std::string to_string(i128 v) {
    if (v == 0) return "0";
    bool neg = v < 0;
    u128 u = neg ? static_cast<u128>(-(v + 1)) + 1 : static_cast<u128>(v);
    std::string out;
    while (u > 0) {
        out.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
        u /= 10;
    }
    if (neg) out.push_back('-');
    std::reverse(out.begin(), out.end());
    return out;
}

Rational::Rational(i128 n, i128 d) {
    if (d == 0) throw std::domain_error("rational with zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    i128 g = gcd128(n, d);
    if (g > 1) {
        n /= g;
        d /= g;
    }
    num_ = n;
    den_ = d;
}

Rational Rational::parse(const std::string& text) {
    auto bad = [&]() { return std::invalid_argument("not a rational: '" + text + "'"); };
    if (text.empty()) throw bad();
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        Rational n = parse(text.substr(0, slash));
        Rational d = parse(text.substr(slash + 1));
        if (d.num_ == 0) throw bad();
        return n / d;
    }
    std::size_t i = 0;
    bool neg = false;
    if (text[0] == '-' || text[0] == '+') {
        neg = text[0] == '-';
        i = 1;
    }
    i128 n = 0;
    i128 d = 1;
    bool seen_digit = false;
    bool seen_dot = false;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (c == '.' && !seen_dot) {
            seen_dot = true;
            continue;
        }
        if (!std::isdigit(static_cast<unsigned char>(c))) throw bad();
        seen_digit = true;
        n = n * 10 + (c - '0');
        if (seen_dot) d *= 10;
        if (n > (static_cast<i128>(1) << 100) || d > (static_cast<i128>(1) << 100)) throw bad();
    }
    if (!seen_digit) throw bad();
    return Rational(neg ? -n : n, d);
}

Rational Rational::operator+(const Rational& o) const {
    i128 g = gcd128(den_, o.den_);
    return Rational(num_ * (o.den_ / g) + o.num_ * (den_ / g), den_ / g * o.den_);
}

Rational Rational::operator-(const Rational& o) const { return *this + (-o); }

Rational Rational::operator*(const Rational& o) const {
    i128 g1 = gcd128(num_, o.den_);
    i128 g2 = gcd128(o.num_, den_);
    if (g1 == 0) g1 = 1;
    if (g2 == 0) g2 = 1;
    return Rational((num_ / g1) * (o.num_ / g2), (den_ / g2) * (o.den_ / g1));
}

Rational Rational::operator/(const Rational& o) const {
    if (o.num_ == 0) throw std::domain_error("rational division by zero");
    return *this * Rational(o.den_, o.num_);
}

std::strong_ordering Rational::operator<=>(const Rational& o) const {
    i128 l = num_ * o.den_;
    i128 r = o.num_ * den_;
    if (l < r) return std::strong_ordering::less;
    if (l > r) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

i128 Rational::floor() const { return floor_div(num_, den_); }

i128 Rational::ceil() const { return -floor_div(-num_, den_); }

Rational Rational::floor_to(i128 scale) const { return Rational((*this * Rational(scale, 1)).floor(), scale); }

Rational Rational::ceil_to(i128 scale) const { return Rational((*this * Rational(scale, 1)).ceil(), scale); }

std::string Rational::to_decimal(int digits) const {
    i128 scale = 1;
    for (int i = 0; i < digits; ++i) scale *= 10;
    i128 a = abs128(num_);
    i128 whole = a / den_;
    i128 frac = (a % den_) * scale / den_;
    std::string out = (num_ < 0 && (whole != 0 || frac != 0)) ? "-" : "";
    out += atomscan::to_string(whole);
    if (digits > 0) {
        std::string f = atomscan::to_string(frac);
        out += "." + std::string(static_cast<std::size_t>(digits) - f.size(), '0') + f;
    }
    return out;
}

std::string Rational::to_string() const {
    if (den_ == 1) return atomscan::to_string(num_);
    return atomscan::to_string(num_) + "/" + atomscan::to_string(den_);
}

}  // namespace atomscan

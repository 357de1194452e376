#include <gtest/gtest.h>

#include <random>

#include "atomscan/rational.hpp"

using atomscan::i128;
using atomscan::Rational;

TEST(Rational, NormalizesToLowestTerms) {
    Rational r(6, -8);
    EXPECT_EQ(r.num(), -3);
    EXPECT_EQ(r.den(), 4);
    EXPECT_EQ(Rational(0, 5), Rational(0));
}

TEST(Rational, ZeroDenominatorThrows) { EXPECT_THROW(Rational(1, 0), std::domain_error); }

TEST(Rational, ParsesIntegersDecimalsAndFractions) {
    EXPECT_EQ(Rational::parse("3"), Rational(3));
    EXPECT_EQ(Rational::parse("-7"), Rational(-7));
    EXPECT_EQ(Rational::parse("19.28"), Rational(1928, 100));
    EXPECT_EQ(Rational::parse("2/3"), Rational(2, 3));
    EXPECT_EQ(Rational::parse("0.975"), Rational(39, 40));
}

TEST(Rational, RejectsMalformedText) {
    for (const char* s : {"", "abc", "1/0", "1.2.3", "--1", "3/"}) {
        EXPECT_THROW(Rational::parse(s), std::invalid_argument) << s;
    }
}

TEST(Rational, Arithmetic) {
    Rational a(1, 3), b(1, 6);
    EXPECT_EQ(a + b, Rational(1, 2));
    EXPECT_EQ(a - b, Rational(1, 6));
    EXPECT_EQ(a * b, Rational(1, 18));
    EXPECT_EQ(a / b, Rational(2));
    EXPECT_EQ(-a, Rational(-1, 3));
    EXPECT_THROW(a / Rational(0), std::domain_error);
}

TEST(Rational, Ordering) {
    EXPECT_LT(Rational(1, 3), Rational(1, 2));
    EXPECT_GT(Rational(-1, 3), Rational(-1, 2));
    EXPECT_EQ(Rational(2, 4) <=> Rational(1, 2), std::strong_ordering::equal);
}

TEST(Rational, FloorAndCeil) {
    EXPECT_EQ(Rational(7, 2).floor(), 3);
    EXPECT_EQ(Rational(7, 2).ceil(), 4);
    EXPECT_EQ(Rational(-7, 2).floor(), -4);
    EXPECT_EQ(Rational(-7, 2).ceil(), -3);
    EXPECT_EQ(Rational(4).floor(), 4);
    EXPECT_EQ(Rational(4).ceil(), 4);
    EXPECT_EQ(Rational(617, 32).floor_to(100), Rational(1928, 100));
    EXPECT_EQ(Rational(9, 13).floor_to(1000), Rational(692, 1000));
    EXPECT_EQ(Rational(7, 5).ceil_to(1), Rational(2));
}

TEST(Rational, DecimalAndStringForms) {
    EXPECT_EQ(Rational(1, 3).to_decimal(2), "0.33");
    EXPECT_EQ(Rational(2, 3).to_decimal(3), "0.666");
    EXPECT_EQ(Rational(5).to_decimal(2), "5.00");
    EXPECT_EQ(Rational(1, 20).to_decimal(2), "0.05");
    EXPECT_EQ(Rational(5).to_string(), "5");
    EXPECT_EQ(Rational(3, 100).to_string(), "3/100");
}

TEST(Rational, StringRoundTripProperty) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<long long> num(-1'000'000'000, 1'000'000'000);
    std::uniform_int_distribution<long long> den(1, 1'000'000);
    for (int i = 0; i < 2000; ++i) {
        Rational r(static_cast<i128>(num(rng)), static_cast<i128>(den(rng)));
        EXPECT_EQ(Rational::parse(r.to_string()), r);
    }
}

TEST(Rational, FloorCeilBracketProperty) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<long long> num(-100000, 100000);
    std::uniform_int_distribution<long long> den(1, 997);
    for (int i = 0; i < 2000; ++i) {
        Rational r(static_cast<i128>(num(rng)), static_cast<i128>(den(rng)));
        EXPECT_LE(Rational::from_i128(r.floor()), r);
        EXPECT_GE(Rational::from_i128(r.ceil()), r);
        EXPECT_LE(r.ceil() - r.floor(), 1);
    }
}

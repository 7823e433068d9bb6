#include <doctest.h>

#include "etdrk/error.hpp"
#include "etdrk/rational.hpp"

using etdrk::Rational;

TEST_SUITE("rational") {
  TEST_CASE("lowest terms and sign normalisation") {
    const Rational r(6, -8);
    CHECK(r.num() == -3);
    CHECK(r.den() == 4);
    CHECK(r.str() == "-3/4");
    CHECK(Rational(4, 2).str() == "2");
    CHECK(Rational(0, 5).str() == "0");
  }

  TEST_CASE("arithmetic and ordering") {
    CHECK(Rational(1, 2) + Rational(1, 3) == Rational(5, 6));
    CHECK(Rational(1, 2) - Rational(2, 3) == Rational(-1, 6));
    CHECK(Rational(4, 9) * Rational(3, 2) == Rational(2, 3));
    CHECK(Rational(4, 9) / Rational(2, 3) == Rational(2, 3));
    CHECK(Rational(1, 3) < Rational(1, 2));
    CHECK(etdrk::pow(Rational(2, 3), 3) == Rational(8, 27));
    CHECK(etdrk::factorial(5) == Rational(120));
  }

  TEST_CASE("parse") {
    CHECK(Rational::parse("4/9") == Rational(4, 9));
    CHECK(Rational::parse("-3/6") == Rational(-1, 2));
    CHECK(Rational::parse("7") == Rational(7));
    CHECK_THROWS_AS(Rational::parse("1/0"), etdrk::InvalidArgument);
    CHECK_THROWS(Rational::parse("x"));
  }

  TEST_CASE("overflow is reported") {
    const Rational big(std::int64_t{1} << 62);
    CHECK_THROWS_AS(big * big, etdrk::InvalidArgument);
  }
}

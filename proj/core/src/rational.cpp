#include "etdrk/rational.hpp"

#include <charconv>
#include <limits>
#include <numeric>

#include "etdrk/error.hpp"

namespace etdrk {
namespace {

__extension__ typedef __int128 Wide;

Rational make_reduced(Wide num, Wide den) {
  if (den == 0) throw InvalidArgument("rational: zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  Wide a = num < 0 ? -num : num;
  Wide b = den;
  while (b != 0) {
    Wide t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  constexpr Wide lo = std::numeric_limits<std::int64_t>::min() + 1;
  constexpr Wide hi = std::numeric_limits<std::int64_t>::max();
  if (num < lo || num > hi || den > hi) throw InvalidArgument("rational: 64-bit overflow");
  return Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

}  // namespace

Rational::Rational(std::int64_t num) : num_(num), den_(1) {}

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw InvalidArgument("rational: zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = g > 1 ? num / g : num;
  den_ = g > 1 ? den / g : den;
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::parse(std::string_view text) {
  auto parse_int = [&](std::string_view part) {
    std::int64_t value = 0;
    if (!part.empty() && part.front() == '+') part.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size()) {
      throw ParseError("invalid rational literal '" + std::string(text) + "'");
    }
    return value;
  };
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return Rational(parse_int(text));
  return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
}

Rational Rational::operator-() const { return Rational(-num_, den_); }

Rational& Rational::operator+=(const Rational& o) {
  return *this = make_reduced(Wide(num_) * o.den_ + Wide(o.num_) * den_, Wide(den_) * o.den_);
}

Rational& Rational::operator-=(const Rational& o) { return *this += -o; }

Rational& Rational::operator*=(const Rational& o) {
  return *this = make_reduced(Wide(num_) * o.num_, Wide(den_) * o.den_);
}

Rational& Rational::operator/=(const Rational& o) {
  if (o.num_ == 0) throw InvalidArgument("rational: division by zero");
  return *this = make_reduced(Wide(num_) * o.den_, Wide(den_) * o.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  return Wide(a.num_) * b.den_ <=> Wide(b.num_) * a.den_;
}

Rational pow(Rational base, int exponent) {
  if (exponent < 0) return Rational(1) / pow(base, -exponent);
  Rational out(1);
  for (int i = 0; i < exponent; ++i) out *= base;
  return out;
}

Rational factorial(int n) {
  Rational out(1);
  for (int i = 2; i <= n; ++i) out *= Rational(i);
  return out;
}

}  // namespace etdrk

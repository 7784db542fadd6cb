#pragma once

// Scalar support shared by every module: an exact rational type, conversion
// helpers, and the input-error exception used across the library.

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>

namespace sievekit {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Thrown for violated preconditions on user-supplied values.
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

template <typename T>
concept Scalar = std::same_as<T, double> || std::same_as<T, Rational>;

template <Scalar T>
inline constexpr bool is_exact_v = std::is_same_v<T, Rational>;

inline double to_double(double v) { return v; }
inline double to_double(const Rational &v) {
  return static_cast<double>(v);
}

template <Scalar T> T ratio(std::int64_t num, std::int64_t den) {
  if constexpr (is_exact_v<T>) {
    return Rational(num, den);
  } else {
    return static_cast<double>(num) / static_cast<double>(den);
  }
}

template <Scalar T> T from_double(double v) {
  if constexpr (is_exact_v<T>) {
    // Every finite double is a dyadic rational; this conversion is exact.
    return Rational(v);
  } else {
    return v;
  }
}

inline std::string to_string(const Rational &v) {
  return v.str();
}

/// floor(v) as a signed 64-bit integer.
inline std::int64_t floor_to_int(double v) {
  return static_cast<std::int64_t>(std::floor(v));
}
inline std::int64_t floor_to_int(const Rational &v) {
  BigInt q = boost::multiprecision::numerator(v) /
             boost::multiprecision::denominator(v);
  // cpp_int division truncates toward zero.
  if (v < 0 && Rational(q) != v) {
    q -= 1;
  }
  return static_cast<std::int64_t>(q);
}

/// Parses "a/b", an integer, or a plain decimal ("0.4") into an exact
/// rational. Decimals are read as their literal decimal value, so "0.4"
/// becomes 2/5 rather than the nearest double.
inline Rational parse_rational(std::string_view text) {
  auto fail = [&] {
    return InputError("not a rational number: '" + std::string(text) + "'");
  };
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front())))
    text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  if (text.empty())
    throw fail();

  auto parse_decimal = [&](std::string_view s) -> Rational {
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
      negative = s.front() == '-';
      s.remove_prefix(1);
    }
    BigInt digits = 0;
    BigInt scale = 1;
    bool seen_dot = false;
    bool seen_digit = false;
    for (char c : s) {
      if (c == '.') {
        if (seen_dot)
          throw fail();
        seen_dot = true;
      } else if (c >= '0' && c <= '9') {
        digits = digits * 10 + (c - '0');
        if (seen_dot)
          scale *= 10;
        seen_digit = true;
      } else {
        throw fail();
      }
    }
    if (!seen_digit)
      throw fail();
    Rational r(digits, scale);
    return negative ? Rational(-r) : r;
  };

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Rational num = parse_decimal(text.substr(0, slash));
    Rational den = parse_decimal(text.substr(slash + 1));
    if (den == 0)
      throw InputError("zero denominator in '" + std::string(text) + "'");
    return num / den;
  }
  return parse_decimal(text);
}

} // namespace sievekit

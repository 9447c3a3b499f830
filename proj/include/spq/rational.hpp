#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>

namespace spq {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// "3/2", "1", "0"
std::string to_string(const Rational& r);

// Accepts "p/q", "p" and decimal literals such as "1.5".
// Throws std::invalid_argument on malformed input or a zero denominator.
Rational parse_rational(const std::string& text);

double to_double(const Rational& r);

} // namespace spq

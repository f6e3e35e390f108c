#pragma once

#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace clab {

// Exact rational number. Payoffs, probabilities and deviation gains are kept
// in this type end to end; doubles only appear at the reporting boundary and
// inside the learning dynamics.
using Rational = boost::multiprecision::cpp_rational;

// Accepts "p/q", a plain integer "p", or a terminating decimal like "2.1"
// (which becomes 21/10). Throws ConfigError on anything else, including q = 0.
Rational parse_rational(std::string_view text);

// Canonical form: "p/q" in lowest terms, or just "p" when the denominator is 1.
std::string format_rational(const Rational& value);

double to_double(const Rational& value);

// Shortest round-trip-safe decimal form (17 significant digits) used whenever
// a floating-point value crosses the serialization boundary.
std::string format_double(double value);

}  // namespace clab

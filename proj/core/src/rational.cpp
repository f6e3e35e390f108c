#include "clab/rational.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>

#include "clab/errors.hpp"

namespace clab {

namespace {

using BigInt = boost::multiprecision::cpp_int;

bool is_integer_token(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

BigInt parse_big_int(std::string_view s) {
  return BigInt(std::string(s));
}

}  // namespace

Rational parse_rational(std::string_view text) {
  if (text.empty()) throw ConfigError("empty rational literal");

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    std::string_view num = text.substr(0, slash);
    std::string_view den = text.substr(slash + 1);
    if (!is_integer_token(num) || !is_integer_token(den)) {
      throw ConfigError("malformed rational literal '" + std::string(text) + "'");
    }
    BigInt q = parse_big_int(den);
    if (q == 0) throw ConfigError("zero denominator in '" + std::string(text) + "'");
    return Rational(parse_big_int(num), q);
  }

  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    bool negative = !whole.empty() && whole[0] == '-';
    if (!frac.empty() && !is_integer_token(frac)) {
      throw ConfigError("malformed decimal literal '" + std::string(text) + "'");
    }
    if (whole.empty() || whole == "-" || whole == "+") {
      whole = "0";
    } else if (!is_integer_token(whole)) {
      throw ConfigError("malformed decimal literal '" + std::string(text) + "'");
    }
    BigInt scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    BigInt mantissa = parse_big_int(whole) * scale;
    if (!frac.empty()) {
      BigInt tail = parse_big_int(frac);
      mantissa += negative ? -tail : tail;
    }
    return Rational(mantissa, scale);
  }

  if (!is_integer_token(text)) {
    throw ConfigError("malformed rational literal '" + std::string(text) + "'");
  }
  return Rational(parse_big_int(text));
}

std::string format_rational(const Rational& value) {
  std::string num = numerator(value).str();
  if (denominator(value) == 1) return num;
  return num + "/" + denominator(value).str();
}

double to_double(const Rational& value) {
  return value.convert_to<double>();
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return std::string(buf);
}

}  // namespace clab

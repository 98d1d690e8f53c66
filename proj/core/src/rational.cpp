#include "hytccp/rational.hpp"

#include <cctype>

namespace hytccp {

BigInt rat_num(const Rat& r) { return boost::multiprecision::numerator(r); }
BigInt rat_den(const Rat& r) { return boost::multiprecision::denominator(r); }

std::string rat_to_string(const Rat& r) {
  BigInt n = rat_num(r), d = rat_den(r);
  if (d == 1) return n.str();
  return n.str() + "/" + d.str();
}

std::string rat_to_decimal(const Rat& r, int sig_digits) {
  if (r == 0) return "0";
  BigInt n = rat_num(r), d = rat_den(r);
  std::string sign;
  if (n < 0) {
    sign = "-";
    n = -n;
  }
  BigInt ip = n / d;
  BigInt rem = n % d;
  std::string int_part = ip.str();
  int sig_used = (ip == 0) ? 0 : static_cast<int>(int_part.size());
  std::string frac;
  // Long division; once past the leading zeros every digit is significant.
  while (rem != 0) {
    if (sig_used >= sig_digits) break;
    rem *= 10;
    BigInt digit = rem / d;
    rem %= d;
    frac += static_cast<char>('0' + static_cast<int>(digit));
    if (sig_used > 0 || digit != 0) ++sig_used;
  }
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  if (frac.empty()) return sign + int_part;
  return sign + int_part + "." + frac;
}

std::optional<Rat> rat_from_string(std::string_view s) {
  if (s.empty()) return std::nullopt;
  size_t i = 0;
  bool neg = false;
  if (s[i] == '+' || s[i] == '-') {
    neg = s[i] == '-';
    ++i;
  }
  auto read_digits = [&](std::string& out) {
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) out += s[i++];
  };
  std::string whole;
  read_digits(whole);
  if (whole.empty()) return std::nullopt;
  Rat value;
  if (i < s.size() && s[i] == '.') {
    ++i;
    std::string frac;
    read_digits(frac);
    if (frac.empty() || i != s.size()) return std::nullopt;
    BigInt scale = 1;
    for (size_t k = 0; k < frac.size(); ++k) scale *= 10;
    value = Rat(BigInt(whole) * scale + BigInt(frac), scale);
  } else if (i < s.size() && s[i] == '/') {
    ++i;
    std::string den;
    read_digits(den);
    if (den.empty() || i != s.size()) return std::nullopt;
    BigInt d(den);
    if (d == 0) return std::nullopt;
    value = Rat(BigInt(whole), d);
  } else {
    if (i != s.size()) return std::nullopt;
    value = Rat(BigInt(whole));
  }
  if (neg) value = -value;
  return value;
}

}  // namespace hytccp

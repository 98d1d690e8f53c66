#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace hytccp {

using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

// "p/q" with the "/q" omitted when q == 1. Exact; round-trips through rat_from_string.
std::string rat_to_string(const Rat& r);

// Decimal rendering for humans and CSV columns: truncated (not rounded) at
// `sig_digits` significant digits, trailing zeros stripped. Display only;
// never feed the result back into arithmetic.
std::string rat_to_decimal(const Rat& r, int sig_digits = 20);

// Accepts "p", "p/q", and decimal literals like "-3.25" (read exactly).
std::optional<Rat> rat_from_string(std::string_view s);

BigInt rat_num(const Rat& r);
BigInt rat_den(const Rat& r);

}  // namespace hytccp

#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace truthlab {

/// Exact rational processing time. All allocation decisions compare these
/// exactly; doubles only appear in human-readable report fields.
using Value = mpq_class;

/// Parses "p/q" or "p" in base 10. Throws Error(ParseError) on malformed
/// input or a zero denominator.
Value parse_value(std::string_view text);

/// Canonical "p/q" form; integers keep the "/1" suffix so documents round-trip
/// through one spelling.
std::string to_string(const Value& v);

double to_double(const Value& v);

/// 2^e for any integer e.
Value pow2(int e);

/// eps * floor(x / eps).
Value floor_to_grid(const Value& x, const Value& eps);

Value floor_value(const Value& x);

/// The rational with the smallest denominator in the closed interval
/// [lo, hi] (ties by smallest numerator magnitude). Requires 0 <= lo <= hi.
Value simplest_between(const Value& lo, const Value& hi);

/// True iff 1/eps is a positive integer.
bool is_unit_fraction_grid(const Value& eps);

/// Integer power of a rational.
Value pow(const Value& base, unsigned long exponent);

}  // namespace truthlab

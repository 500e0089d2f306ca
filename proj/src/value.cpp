#include "truthlab/value.hpp"

#include "truthlab/error.hpp"

#include <cctype>
#include <vector>

namespace truthlab {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::InvalidInstance: return "InvalidInstance";
    case Errc::InvalidAllocation: return "InvalidAllocation";
    case Errc::InstanceTooLarge: return "InstanceTooLarge";
    case Errc::ParseError: return "ParseError";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::UnsupportedVariant: return "UnsupportedVariant";
    case Errc::BadDeviation: return "BadDeviation";
    case Errc::PreconditionViolated: return "PreconditionViolated";
    case Errc::NotMonotone: return "NotMonotone";
    case Errc::Unbounded: return "Unbounded";
    case Errc::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case Errc::DeltaTooLarge: return "DeltaTooLarge";
    case Errc::GridTooFine: return "GridTooFine";
    case Errc::NegativeValue: return "NegativeValue";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Discontinuity: return "Discontinuity";
    case Errc::NoNiceStar: return "NoNiceStar";
    case Errc::InsufficientMultiplicity: return "InsufficientMultiplicity";
    case Errc::CertificateMismatch: return "CertificateMismatch";
    case Errc::BoxNotFound: return "BoxNotFound";
    case Errc::AssertionFailed: return "AssertionFailed";
  }
  return "Unknown";
}

namespace {

bool is_integer_literal(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

}  // namespace

Value parse_value(std::string_view text) {
  auto slash = text.find('/');
  std::string_view num = text.substr(0, slash);
  std::string_view den = slash == std::string_view::npos ? std::string_view("1") : text.substr(slash + 1);
  if (!is_integer_literal(num) || !is_integer_literal(den) || den[0] == '-' || den[0] == '+') {
    throw Error(Errc::ParseError, "malformed rational '" + std::string(text) + "'");
  }
  mpz_class p(std::string(num[0] == '+' ? num.substr(1) : num), 10);
  mpz_class q(std::string(den), 10);
  if (q == 0) {
    throw Error(Errc::ParseError, "zero denominator in '" + std::string(text) + "'");
  }
  Value v(p, q);
  v.canonicalize();
  return v;
}

std::string to_string(const Value& v) {
  return v.get_num().get_str(10) + "/" + v.get_den().get_str(10);
}

double to_double(const Value& v) { return v.get_d(); }

Value pow2(int e) {
  mpz_class p = 1;
  if (e >= 0) {
    mpz_mul_2exp(p.get_mpz_t(), p.get_mpz_t(), static_cast<mp_bitcnt_t>(e));
    return Value(p);
  }
  mpz_class q = 1;
  mpz_mul_2exp(q.get_mpz_t(), q.get_mpz_t(), static_cast<mp_bitcnt_t>(-e));
  return Value(p, q);
}

Value floor_value(const Value& x) {
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
  return Value(f);
}

Value floor_to_grid(const Value& x, const Value& eps) {
  Value ratio = x / eps;
  return Value(floor_value(ratio) * eps);
}

Value simplest_between(const Value& lo, const Value& hi) {
  // Continued-fraction descent: peel off the common integer part until an
  // integer fits, then rebuild the convergent.
  std::vector<mpz_class> terms;
  Value a = lo;
  Value b = hi;
  for (;;) {
    Value fl = floor_value(a);
    if (fl == a) {
      terms.push_back(fl.get_num());
      break;
    }
    Value c = fl + 1;
    if (c <= b) {
      terms.push_back(c.get_num());
      break;
    }
    terms.push_back(fl.get_num());
    Value next_a = 1 / (b - fl);
    Value next_b = 1 / (a - fl);
    a = next_a;
    b = next_b;
  }
  Value result(terms.back());
  for (auto it = terms.rbegin() + 1; it != terms.rend(); ++it) {
    result = Value(*it) + 1 / result;
  }
  result.canonicalize();
  return result;
}

bool is_unit_fraction_grid(const Value& eps) {
  return eps > 0 && eps.get_num() == 1;
}

Value pow(const Value& base, unsigned long exponent) {
  mpz_class num;
  mpz_class den;
  mpz_pow_ui(num.get_mpz_t(), base.get_num_mpz_t(), exponent);
  mpz_pow_ui(den.get_mpz_t(), base.get_den_mpz_t(), exponent);
  Value v(num, den);
  v.canonicalize();
  return v;
}

}  // namespace truthlab

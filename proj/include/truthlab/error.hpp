#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace truthlab {

enum class Errc {
  InvalidInstance,
  InvalidAllocation,
  InstanceTooLarge,
  ParseError,
  InvalidSpec,
  UnsupportedVariant,
  BadDeviation,
  PreconditionViolated,
  NotMonotone,
  Unbounded,
  ResolutionTooCoarse,
  DeltaTooLarge,
  GridTooFine,
  NegativeValue,
  InvalidConfig,
  Discontinuity,
  NoNiceStar,
  InsufficientMultiplicity,
  CertificateMismatch,
  BoxNotFound,
  AssertionFailed,
};

std::string_view errc_name(Errc code);

/// Every failure in the library surfaces as an Error tagged with an Errc.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace truthlab

#pragma once

#include <stdexcept>
#include <string>

namespace sqm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidInput : Error { using Error::Error; };
struct InvalidScaling : Error { using Error::Error; };
struct ConditionNotMet : Error { using Error::Error; };
struct Unsupported : Error { using Error::Error; };
struct PreconditionError : Error { using Error::Error; };
struct NoSubprincipalControl : Error { using Error::Error; };
struct ResolutionError : Error { using Error::Error; };
struct IllConditioned : Error { using Error::Error; };
struct ResourceError : Error { using Error::Error; };
struct SweepError : Error { using Error::Error; };
struct OracleViolation : Error { using Error::Error; };

}  // namespace sqm

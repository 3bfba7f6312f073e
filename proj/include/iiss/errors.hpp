#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iiss {

enum class ErrorCode {
  InvalidArgument,
  NegativeArgument,
  DomainExceeded,
  NotReachable,
  NoMajorant,
  DimensionMismatch,
  InvalidInterval,
  NonFinite,
  StepTooLarge,
  UnknownScenario,
  ZeroGain,
  HorizonUnbounded,
  NoRoute,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the core carries one of the codes above so the C
/// layer can translate it without string matching.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace iiss

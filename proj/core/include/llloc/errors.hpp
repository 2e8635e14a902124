#pragma once

#include <stdexcept>
#include <string>

namespace llloc {

enum class ErrorCode {
  InvalidBounds,
  OutOfBounds,
  EmptyCloud,
  NonPositiveDt,
  GapTooLarge,
  DegenerateFoV,
  OutOfRange,
  EmptyLocalMap,
  NoCorrespondences,
  SolverSingular,
  UnknownScenario,
  CountMismatch,
  NoOverlap,
  InvalidConfig,
  Io,
};

const char* to_string(ErrorCode code);

// All recoverable and fatal failures in the library are reported through this
// type; callers switch on code() to decide between fallback and abort.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace llloc

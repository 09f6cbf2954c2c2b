#pragma once

#include <stdexcept>
#include <string>

namespace trilqg {

// Every failure mode the library reports. The CLI maps these onto process
// exit codes; library callers can switch on the code instead of parsing
// messages.
enum class ErrorCode {
  SingularPsi,
  SingularPhi,
  ImaginaryAxisEigs,
  NoStableSubspace,
  UnstableA,
  NonzeroD,
  SpectraOverlap,
  ResonantFrequency,
  DimensionMismatch,
  IndexOutOfBounds,
  SingularStep2System,
  UnstableDiagonalBlock,
  PSDViolation,
  UnstableClosedLoop,
  SingularPsiBlock,
  SingularPhiBlock,
  IndexOutOfDiagram,
  UnstableFactor,
  ParseError,
  SchemaError,
  StructureError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, double detail = 0.0)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const { return code_; }

  // Code-specific numeric payload: condition estimate for
  // SingularStep2System, most-negative eigenvalue for PSDViolation,
  // axis distance for ImaginaryAxisEigs, and so on.
  double detail() const { return detail_; }

 private:
  ErrorCode code_;
  double detail_;
};

}  // namespace trilqg

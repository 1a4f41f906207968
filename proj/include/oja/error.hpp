#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oja {

enum class ErrorCode {
  InvalidArgument,
  BadDims,
  NonFinite,
  RankDeficient,
  NoConvergence,
  NotSymmetric,
  NotOrthonormal,
  HeadSingular,
  GapViolation,
  ThresholdOutOfRange,
  StepTooLarge,
  StreamExhausted,
  TooFewPoints,
  NonPositiveError,
  BadHeader,
  RowLengthMismatch,
  NonFiniteValue,
  ParseError,
  ValidationError,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Error tied to a position in an input file (1-based line).
class LineError : public Error {
 public:
  LineError(ErrorCode code, std::size_t line, const std::string& what)
      : Error(code, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace oja

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vecchia {

enum class ErrorCode {
  DimensionMismatch,
  NonFiniteValue,
  EmptyData,
  LengthMismatch,
  LatitudeOutOfRange,
  UnknownFamily,
  InvalidArgument,
  NotPositiveDefinite,
  SingularDesign,
  DegenerateInformation,
  SizeGuardExceeded,
  ParseError,
  MissingColumn,
  IoError,
};

// Coarse grouping used by the CLI to pick an exit code.
enum class ErrorCategory { Usage, Data, Numerical, Io };

std::string_view to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

// Raised when a local covariance matrix fails to factor. `observation` is the
// row of the neighbor array being processed (or npos outside the engine) and
// `pivot` the zero-based diagonal position whose pivot was not positive.
class NotPositiveDefiniteError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  NotPositiveDefiniteError(std::size_t observation, std::size_t pivot,
                           const std::string& context = {});

  std::size_t observation() const noexcept { return observation_; }
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t observation_;
  std::size_t pivot_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace vecchia

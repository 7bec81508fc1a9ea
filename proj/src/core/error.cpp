#include "vecchia/error.hpp"

namespace vecchia {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::EmptyData: return "EmptyData";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::LatitudeOutOfRange: return "LatitudeOutOfRange";
    case ErrorCode::UnknownFamily: return "UnknownFamily";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::DegenerateInformation: return "DegenerateInformation";
    case ErrorCode::SizeGuardExceeded: return "SizeGuardExceeded";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownFamily:
    case ErrorCode::InvalidArgument:
      return ErrorCategory::Usage;
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::SingularDesign:
    case ErrorCode::DegenerateInformation:
      return ErrorCategory::Numerical;
    case ErrorCode::IoError:
      return ErrorCategory::Io;
    default:
      return ErrorCategory::Data;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

namespace {

std::string npd_message(std::size_t observation, std::size_t pivot,
                        const std::string& context) {
  std::string msg = "matrix not positive definite at pivot " + std::to_string(pivot);
  if (observation != NotPositiveDefiniteError::npos) {
    msg += " (observation " + std::to_string(observation) + ")";
  }
  if (!context.empty()) msg += ": " + context;
  return msg;
}

}  // namespace

NotPositiveDefiniteError::NotPositiveDefiniteError(std::size_t observation,
                                                   std::size_t pivot,
                                                   const std::string& context)
    : Error(ErrorCode::NotPositiveDefinite, npd_message(observation, pivot, context)),
      observation_(observation),
      pivot_(pivot) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace vecchia

#include "densetrack/error.hpp"

namespace densetrack {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter: return "invalid-parameter";
    case ErrorCode::kDegenerateConfiguration: return "degenerate-configuration";
    case ErrorCode::kDomain: return "domain-error";
    case ErrorCode::kDegenerateFeature: return "degenerate-feature";
    case ErrorCode::kPreconditionViolation: return "precondition-violation";
    case ErrorCode::kConfiguration: return "configuration-error";
    case ErrorCode::kParse: return "parse-error";
    case ErrorCode::kIo: return "io-error";
  }
  return "unknown";
}

}  // namespace densetrack

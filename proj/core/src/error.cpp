#include "otest/error.hpp"

namespace otest {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNonPositiveProbability: return "NonPositiveProbability";
    case ErrorKind::kMassNotOne: return "MassNotOne";
    case ErrorKind::kMisaligned: return "Misaligned";
    case ErrorKind::kEpsOutOfRange: return "EpsOutOfRange";
    case ErrorKind::kConstraintViolation: return "ConstraintViolation";
    case ErrorKind::kUnknownName: return "UnknownName";
    case ErrorKind::kInstanceTooLarge: return "InstanceTooLarge";
    case ErrorKind::kInvalidInput: return "InvalidInput";
    case ErrorKind::kEmptyConditioning: return "EmptyConditioning";
    case ErrorKind::kNoConvergence: return "NoConvergence";
    case ErrorKind::kNonNegativeOptimum: return "NonNegativeOptimum";
    case ErrorKind::kSlackBudgetExceeded: return "SlackBudgetExceeded";
    case ErrorKind::kConditioningTooRare: return "ConditioningTooRare";
    case ErrorKind::kCertificateMismatch: return "CertificateMismatch";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kCertificateMismatch:
      return ErrorCategory::kVerification;
    case ErrorKind::kNoConvergence:
    case ErrorKind::kNonNegativeOptimum:
    case ErrorKind::kSlackBudgetExceeded:
    case ErrorKind::kConditioningTooRare:
      return ErrorCategory::kNumerical;
    default:
      return ErrorCategory::kValidation;
  }
}

int exit_code_of(ErrorKind kind) {
  switch (category_of(kind)) {
    case ErrorCategory::kValidation: return 2;
    case ErrorCategory::kVerification: return 3;
    case ErrorCategory::kNumerical: return 4;
  }
  return 1;
}

}  // namespace otest

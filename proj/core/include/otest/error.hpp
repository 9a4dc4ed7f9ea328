#pragma once

#include <stdexcept>
#include <string>

namespace otest {

// Every failure the library reports carries one of these kinds; the CLI maps
// the kind's category onto its exit code.
enum class ErrorKind {
  kNonPositiveProbability,
  kMassNotOne,
  kMisaligned,
  kEpsOutOfRange,
  kConstraintViolation,
  kUnknownName,
  kInstanceTooLarge,
  kInvalidInput,
  kEmptyConditioning,
  kNoConvergence,
  kNonNegativeOptimum,
  kSlackBudgetExceeded,
  kConditioningTooRare,
  kCertificateMismatch,
};

enum class ErrorCategory { kValidation, kVerification, kNumerical };

const char* to_string(ErrorKind kind);
ErrorCategory category_of(ErrorKind kind);

// Process exit code for the CLI: 2 validation, 3 verification, 4 numerical.
int exit_code_of(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace otest

#ifndef FASTPCA_ERRORS_HPP
#define FASTPCA_ERRORS_HPP

#include <stdexcept>

namespace fastpca {

// Rejected input: a precondition or invariant on arguments does not hold.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numerical breakdown discovered mid-computation (degenerate trajectory,
// eigensolver non-convergence, exhausted retry budget).
struct DiagnosticError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file (wrong magic, truncated payload, ragged rows).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fastpca

#endif

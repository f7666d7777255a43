// Exception hierarchy shared by the whole library.
//
// Two broad families matter to callers: configuration/validation problems
// (bad parameters, inadmissible scheme/potential pairs, malformed input) and
// numerical failures (non-convergence, indefinite or ill-conditioned overlap).
// The command-line driver maps the former to exit code 2 and the latter to 3.
#pragma once

#include <stdexcept>
#include <string>

namespace speclab {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Precondition or input validation failure (caller error).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Malformed or inconsistent experiment configuration (file-level).
class ConfigError : public ValidationError {
 public:
  explicit ConfigError(const std::string& msg) : ValidationError(msg) {}
};

// The requested computation needs a finer discretization than the one
// supplied (unresolvable scale, insufficient cutoff).
class ResolutionError : public ValidationError {
 public:
  explicit ResolutionError(const std::string& msg) : ValidationError(msg) {}
};

// Numerical failure while executing an otherwise valid request.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// Iterative eigensolver exceeded its sweep budget.
class ConvergenceError : public NumericalError {
 public:
  explicit ConvergenceError(const std::string& msg) : NumericalError(msg) {}
};

// Overlap matrix is not positive definite, so the pencil is invalid.
class PencilError : public NumericalError {
 public:
  explicit PencilError(const std::string& msg) : NumericalError(msg) {}
};

// Overlap condition number exceeds the configured cap; the problem is never
// silently regularized.
class IllConditionedError : public NumericalError {
 public:
  explicit IllConditionedError(const std::string& msg) : NumericalError(msg) {}
};

}  // namespace speclab

#ifndef HYBRID_ERRORS_HPP
#define HYBRID_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hybrid {

//! Invalid configuration: bad parameters, violated instance conditions.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

//! Operand sizes disagree with the space dimension.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SolverFailure {
  iteration_cap,
  infeasible,
  non_contracting,
};

inline const char* to_string(SolverFailure f) {
  switch (f) {
    case SolverFailure::iteration_cap: return "iteration_cap";
    case SolverFailure::infeasible: return "infeasible";
    case SolverFailure::non_contracting: return "non_contracting";
  }
  return "unknown";
}

//! An iterative routine failed to reach its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(SolverFailure failure, const std::string& what)
      : std::runtime_error(what), failure_(failure) {}

  SolverFailure failure() const { return failure_; }

 private:
  SolverFailure failure_;
};

}  // namespace hybrid

#endif  // HYBRID_ERRORS_HPP

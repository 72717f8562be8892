#ifndef HYBRID_HARNESS_HPP
#define HYBRID_HARNESS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "hybrid/problem_io.hpp"

namespace hybrid {

//! Header of the trace CSV.
inline constexpr std::string_view kTraceHeader =
    "n,x,phi_x0,step_norm,max_T_residual,max_A_residual,max_gep_residual,cut_feasible,invariants_ok";

//! Shortest decimal form that reads back to the same double.
std::string format_number(double v);
//! Coordinates joined by `sep`.
std::string format_vector(const Vector& v, char sep = ';');

void write_trace_csv(std::ostream& out, const IterationTrace& trace);

//! The common solution set F as one explicit set, when every family member
//! exposes its solution set.
std::optional<ConvexSet> explicit_solution_set(const ProblemInstance& instance);

struct OracleReport {
  bool available = false;
  std::string F_description;
  //! closed-form, QP-on-explicit-F or brute-force-grid.
  std::string method;
  //! Pi_F(x0).
  Vector projection;
  //! Resolution of the oracle itself (grid spacing for brute force).
  double accuracy = 0.0;
  //! ||x* - Pi_F(x0)||.
  double distance = 0.0;
  std::size_t steps_checked = 0;
  std::size_t steps_failed = 0;
  std::map<std::string, std::size_t> failures_by_invariant;
};

//! Pi_F(x0) by the most direct available method: a closed form when F is a
//! single point or a single simple set, a projection onto the explicit
//! intersection otherwise, and a residual-filtered grid search in dimension
//! at most 3 when F is not explicit.
OracleReport compute_oracle(const ProblemInstance& instance);

struct ExperimentOutcome {
  RunOutput run;
  OracleReport oracle;
  //! Fast-path versus generic-path comparison, for the Hilbert corollary runners.
  std::optional<double> hilbert_gap;
  std::optional<std::size_t> hilbert_agreeing_steps;
  std::optional<double> hilbert_limit_gap;
  int exit_code = 0;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitSolver = 3;
//! Largest distance between the fast-path and generic-path limits accepted
//! by the corollary runners.
inline constexpr double kHilbertLimitTol = 1e-5;

//! Runs the selected runner, evaluates the oracle and writes the trace and
//! summary files named in spec.outputs.  The exit code is 0 iff the run
//! converged and every enabled check passed, 3 otherwise.  The corollary
//! runners also require the generic path to converge to the same limit.
ExperimentOutcome run_experiment(const ExperimentSpec& spec);

//! Line-oriented key=value report.
std::string summary_text(const ExperimentSpec& spec, const ExperimentOutcome& outcome);

enum class InstanceTemplate { two_ep, two_vi, fp_only, full_theorem1, multi_q };

const char* to_string(InstanceTemplate t);
std::optional<InstanceTemplate> parse_template(std::string_view name);

struct GenerateOptions {
  Index dim = 5;
  //! l_p exponent; unset gives a Hilbert instance.
  std::optional<double> p;
};

//! A problem file whose families all vanish at a planted point p*, recorded
//! as known_solution.  C is the box [-3, 3]^n and p* lies in [-1, 1]^n.
//! Seeds divisible by 4 make F = {p*}; other seeds leave F a flat of
//! dimension 2 clipped by C.  Deterministic in (seed, template, options).
std::string generate_instance(std::uint64_t seed, InstanceTemplate tmpl, const GenerateOptions& options = {});

}  // namespace hybrid

#endif  // HYBRID_HARNESS_HPP

#ifndef HYBRID_HYBRID_SOLVER_HPP
#define HYBRID_HYBRID_SOLVER_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hybrid/operators.hpp"
#include "hybrid/schedule.hpp"

namespace hybrid {

//! One generalized equilibrium problem GEP(f, B) over C.
struct EquilibriumPair {
  Bifunction f;
  MonotoneMap B;
};

struct ProblemInstance {
  SpaceSpec space;
  ConvexSet C;
  std::vector<FixedPointMap> T;
  std::vector<IsmOperator> A;
  std::vector<EquilibriumPair> eq;
  //! Weights of the dual average of the resolvent outputs; empty selects 1/q each.
  std::vector<double> beta;
  //! Unset schedules take the defaults of fill_defaults().
  std::optional<Schedule> alpha;
  std::optional<Schedule> lambda;
  std::optional<Schedule> r;
  Vector x0;
  //! A point of the common solution set, when known.
  std::optional<Vector> known_solution;
  //! Anchor weight and anchor point of the anchored baseline.
  std::optional<Schedule> anchor_weight;
  std::optional<Vector> anchor;
};

//! alpha = 0.5, r = 1, beta = 1/q each, and lambda at the middle of
//! [0.1, 0.9] * c^2 gamma / 2 when the A family is nonempty.
ProblemInstance fill_defaults(ProblemInstance instance);

//! Checks every condition the iteration relies on over the first `horizon`
//! steps; throws ConfigError or DimensionError naming the violated condition.
//! Schedules must already be set.
void validate_instance(const ProblemInstance& instance, std::size_t horizon);

//! c^2 * gamma / 2 with gamma the smallest A constant.
double lambda_bound(const ProblemInstance& instance);

struct SolverConfig {
  double tol = 1e-6;
  int max_iters = 10000;
  bool invariant_checks = true;
  //! Seed for the sampled resolvent certificates.
  std::uint64_t seed = 0;
  double resolvent_tol = 1e-10;
  //! Test hook: adds two contradictory cuts at this step.
  std::optional<int> inject_infeasible_cut_at;
};

struct StepRecord {
  std::size_t n = 0;
  Vector x;
  Vector z;
  Vector y;
  std::vector<Vector> u;
  Vector w;
  Halfspace cut;
  double phi_x0 = 0.0;
  //! ||x_{n+1} - x_n||; NaN when the projection failed.
  double step_norm = 0.0;
  std::vector<double> T_residuals;
  std::vector<double> A_residuals;
  std::vector<double> gep_residuals;
  double max_T_residual = 0.0;
  double max_A_residual = 0.0;
  double max_gep_residual = 0.0;
  bool cut_feasible = true;
  bool invariants_ok = true;
  std::vector<std::string> failed_invariants;
  //! Set when a projection or resolvent solve failed; x_{n+1} was not formed.
  std::optional<SolverFailure> failure;
  std::string failure_message;
};

//! What the iteration carries from one step to the next.
struct HybridState {
  std::size_t n = 0;
  Vector x;
  //! C and every cut so far, projecting x0; set by initial_state().
  std::optional<ShrinkingProjector> projector;
  //! Previous resolvent outputs, used as starting points.
  std::vector<std::optional<Vector>> warm;
  //! Points for the resolvent certificates (unset when checks are off).
  std::shared_ptr<const std::vector<Vector>> certificate_points;
};

HybridState initial_state(const ProblemInstance& instance, const SolverConfig& config);

//! One outer step: z_n, y_n, the q resolvents, w_n, the new cut, and
//! x_{n+1} = Pi of x0 onto C and all cuts.  `instance` must have been
//! through fill_defaults and validate_instance.  A failed inner solve is
//! reported in the record and leaves state.x unchanged.
StepRecord hybrid_step(const ProblemInstance& instance, HybridState& state, const SolverConfig& config);

struct IterationTrace {
  std::vector<StepRecord> steps;
  //! Some map in the instance is user supplied and was not validated.
  bool unchecked_maps = false;
};

enum class Termination { converged, max_iters, infeasible_cut, inner_failure };

const char* to_string(Termination t);

struct SolverResult {
  Vector x;
  std::size_t iterations = 0;
  Termination termination = Termination::max_iters;
  double step_norm = 0.0;
  double max_T_residual = 0.0;
  double max_A_residual = 0.0;
  double max_gep_residual = 0.0;
  std::size_t invariant_failures = 0;
  std::string message;

  bool invariants_ok() const { return invariant_failures == 0; }
};

struct RunOutput {
  SolverResult result;
  IterationTrace trace;
};

//! The hybrid scheme with two equilibrium problems and the A family.
RunOutput run_hybrid(const ProblemInstance& instance, const SolverConfig& config = {});
//! The scheme with no A family (z_n = x_n); valid in every l_p space.
RunOutput run_hybrid_without_ism(const ProblemInstance& instance, const SolverConfig& config = {});
//! Any number q >= 1 of equilibrium problems.
RunOutput run_hybrid_multi(const ProblemInstance& instance, const SolverConfig& config = {});

//! Per-iterate agreement threshold of the Hilbert comparison.
inline constexpr double kHilbertIterateTol = 1e-9;

struct HilbertComparison {
  RunOutput fast;
  RunOutput generic;
  //! Largest ||x_n(fast) - x_n(generic)|| over the common steps.
  double max_iterate_gap = 0.0;
  //! Leading steps whose iterates agree to kHilbertIterateTol.
  std::size_t agreeing_steps = 0;
  //! ||x*(fast) - x*(generic)|| between the final iterates.
  double limit_gap = 0.0;
};

//! Runs a Hilbert instance through the Euclidean shortcuts and through the
//! general l_p formulas at p = 2, and measures how far the iterates drift.
//! The cut sequence amplifies rounding differences between the two paths,
//! so long runs drift apart per iterate while reaching the same limit.
HilbertComparison run_hilbert_specialization(const ProblemInstance& instance, const SolverConfig& config = {});

//! x_{n+1} = a_n x_n + (1 - a_n) S P_C(x_n - l_n A x_n) with S = T[0] and
//! A = A[0] (zero when absent).  Hilbert only; no invariants.
RunOutput run_mann_baseline(const ProblemInstance& instance, const SolverConfig& config = {});

//! x_{n+1} = t_n u + (1 - t_n)(a_n x_n + (1 - a_n) S P_C(x_n - l_n A x_n)),
//! t_n the anchor weight (default 1/(n+2)) and u the anchor (default x0).
RunOutput run_anchored_baseline(const ProblemInstance& instance, const SolverConfig& config = {});

}  // namespace hybrid

#endif  // HYBRID_HYBRID_SOLVER_HPP

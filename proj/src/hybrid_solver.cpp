#include "hybrid/hybrid_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hybrid/resolvent.hpp"

namespace hybrid {

namespace {

constexpr double kInvariantTol = 1e-8;
// Cuts with a dual normal this small relative to Jx are rounding noise in
// their direction; they are kept as the whole space.
constexpr double kCutNoise = 1e-9;
constexpr std::size_t kCertificatePoints = 200;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

struct Residuals {
  std::vector<double> T, A, gep;
};

Residuals residuals_at(const ProblemInstance& inst, const Vector& x) {
  Residuals r;
  for (const auto& T : inst.T) r.T.push_back((T(inst.space, x) - x).norm());
  for (const auto& A : inst.A) r.A.push_back(dual_norm(inst.space, A(x)));
  for (const auto& e : inst.eq) r.gep.push_back(gep_residual(e.f, e.B, inst.C, x));
  return r;
}

void flag(StepRecord& rec, const std::string& what) {
  rec.invariants_ok = false;
  rec.failed_invariants.push_back(what);
}

// Computes z_n, y_n, the resolvent outputs, w_n and the new cut, and returns
// x_{n+1}.
Vector advance(const ProblemInstance& inst, HybridState& state, const SolverConfig& config, StepRecord& rec) {
  const SpaceSpec& space = inst.space;
  const std::size_t n = state.n;
  const Vector& x = state.x;
  const DualVector jx = duality_map(space, x);

  if (!inst.A.empty()) {
    const IsmOperator& A = inst.A[n % inst.A.size()];
    rec.z = gen_project(space, inst.C, duality_map_inverse(space, jx - inst.lambda->at(n) * A(x)));
  } else {
    rec.z = x;
  }

  const double alpha = inst.alpha->at(n);
  const Vector tz = inst.T[n % inst.T.size()](space, rec.z);
  rec.y = duality_map_inverse(space, alpha * jx + (1.0 - alpha) * duality_map(space, tz));

  DualVector jw = DualVector::Zero(x.size());
  for (std::size_t k = 0; k < inst.eq.size(); ++k) {
    ResolventProblem prob{space, inst.C, inst.eq[k].f, inst.eq[k].B, inst.r->at(n), rec.y};
    ResolventOptions ropts;
    ropts.tol = config.resolvent_tol;
    ropts.initial = state.warm[k];
    const ResolventSolution sol = solve_resolvent(prob, ropts);
    if (state.certificate_points) {
      const double tol = 10.0 * config.resolvent_tol * (1.0 + resolvent_operator(prob, sol.z).norm());
      if (!certify_resolvent(prob, sol.z, *state.certificate_points, tol).ok()) {
        flag(rec, "resolvent certificate " + std::to_string(k + 1));
      }
    }
    state.warm[k] = sol.z;
    jw += inst.beta[k] * duality_map(space, sol.z);
    rec.u.push_back(sol.z);
  }
  rec.w = duality_map_inverse(space, jw);

  rec.cut = halfspace_from_phi_cut(space, rec.w, x);
  const DualVector jw_final = duality_map(space, rec.w);
  if ((jx - jw_final).norm() <= kCutNoise * (1.0 + jx.norm())) rec.cut = Halfspace{Vector::Zero(x.size()), 0.0};
  state.projector->add_cut(rec.cut);
  if (config.inject_infeasible_cut_at && *config.inject_infeasible_cut_at == static_cast<int>(n)) {
    const Vector e = Vector::Unit(x.size(), 0);
    state.projector->add_cut(Halfspace{e, -1.0});
    state.projector->add_cut(Halfspace{-e, -1.0});
  }

  ProjectionOptions popts;
  popts.warm_start = x;
  return state.projector->project(popts);
}

void check_invariants(const ProblemInstance& inst, const HybridState& state, const Vector& next,
                      StepRecord& rec) {
  const SpaceSpec& space = inst.space;
  const Vector& x = state.x;
  const double scale = 1.0 + next.norm();
  const double phi_next = lyapunov_phi(space, next, inst.x0);
  if (phi_next < rec.phi_x0 - kInvariantTol * (1.0 + rec.phi_x0)) flag(rec, "phi(x_n, x0) nondecreasing");
  if (!contains(inst.C, next, kInvariantTol * scale)) flag(rec, "x_{n+1} in C");
  if (state.projector->max_cut_excess(next) > kInvariantTol * scale) flag(rec, "x_{n+1} in every cut");
  if (!inst.A.empty()) {
    const double a_norm = rec.A_residuals[state.n % inst.A.size()];
    const double b = inst.lambda->max_over(state.n + 1);
    const double c = space.convexity_constant();
    if (lyapunov_phi(space, x, rec.z) > 4.0 * b * b / (c * c) * a_norm * a_norm + kInvariantTol) {
      flag(rec, "phi(x_n, z_n) <= (4b^2/c^2)||A x_n||^2");
    }
  }
  if (const auto& p = inst.known_solution) {
    const double base = lyapunov_phi(space, *p, x);
    if (lyapunov_phi(space, *p, rec.z) > base + kInvariantTol) flag(rec, "phi(p, z_n) <= phi(p, x_n)");
    if (lyapunov_phi(space, *p, rec.w) > base + kInvariantTol) flag(rec, "phi(p, w_n) <= phi(p, x_n)");
  }
}

void copy_residuals(const StepRecord& rec, SolverResult& result) {
  result.step_norm = rec.step_norm;
  result.max_T_residual = rec.max_T_residual;
  result.max_A_residual = rec.max_A_residual;
  result.max_gep_residual = rec.max_gep_residual;
}

RunOutput run_scheme(const ProblemInstance& input, const SolverConfig& config) {
  if (!(config.tol > 0.0)) throw ConfigError("tol must be positive");
  if (config.max_iters < 1) throw ConfigError("max_iters must be at least 1");
  const ProblemInstance inst = fill_defaults(input);
  validate_instance(inst, static_cast<std::size_t>(config.max_iters));

  RunOutput out;
  for (const auto& T : inst.T) out.trace.unchecked_maps |= !T.checked();
  SolverResult& result = out.result;
  HybridState state = initial_state(inst, config);

  while (state.n < static_cast<std::size_t>(config.max_iters)) {
    const Vector x = state.x;
    StepRecord rec = hybrid_step(inst, state, config);
    copy_residuals(rec, result);
    result.iterations = rec.n + 1;
    if (!rec.invariants_ok) ++result.invariant_failures;
    const auto failure = rec.failure;
    const bool converged = !failure && rec.step_norm <= config.tol && rec.max_T_residual <= config.tol &&
                           rec.max_A_residual <= config.tol && rec.max_gep_residual <= config.tol;
    if (failure) result.message = rec.failure_message;
    out.trace.steps.push_back(std::move(rec));
    if (failure) {
      result.termination =
          *failure == SolverFailure::infeasible ? Termination::infeasible_cut : Termination::inner_failure;
      result.x = x;
      return out;
    }
    if (converged) {
      result.termination = Termination::converged;
      result.x = x;
      return out;
    }
  }
  result.termination = Termination::max_iters;
  result.x = state.x;
  result.message = "iteration cap reached";
  return out;
}

}  // namespace

HybridState initial_state(const ProblemInstance& instance, const SolverConfig& config) {
  HybridState state;
  state.x = instance.x0;
  state.projector.emplace(instance.space, instance.C, instance.x0);
  state.warm.resize(instance.eq.size());
  if (config.invariant_checks) {
    state.certificate_points = resolvent_certificate_points(instance.C, kCertificatePoints, config.seed + 7);
  }
  return state;
}

StepRecord hybrid_step(const ProblemInstance& instance, HybridState& state, const SolverConfig& config) {
  StepRecord rec;
  rec.n = state.n;
  rec.x = state.x;
  rec.phi_x0 = lyapunov_phi(instance.space, state.x, instance.x0);
  Residuals res = residuals_at(instance, state.x);
  rec.max_T_residual = max_of(res.T);
  rec.max_A_residual = max_of(res.A);
  rec.max_gep_residual = max_of(res.gep);
  rec.T_residuals = std::move(res.T);
  rec.A_residuals = std::move(res.A);
  rec.gep_residuals = std::move(res.gep);

  Vector next;
  try {
    next = advance(instance, state, config, rec);
  } catch (const SolverError& e) {
    rec.cut_feasible = false;
    rec.step_norm = std::numeric_limits<double>::quiet_NaN();
    rec.failure = e.failure();
    rec.failure_message = e.what();
    ++state.n;
    return rec;
  }

  rec.step_norm = (next - state.x).norm();
  rec.cut_feasible = rec.cut.whole_space() || rec.cut.excess(next) <= kInvariantTol * (1.0 + next.norm());
  if (config.invariant_checks) check_invariants(instance, state, next, rec);
  state.x = std::move(next);
  ++state.n;
  return rec;
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iters: return "max_iters";
    case Termination::infeasible_cut: return "infeasible_cut";
    case Termination::inner_failure: return "inner_failure";
  }
  return "unknown";
}

double lambda_bound(const ProblemInstance& instance) {
  if (instance.A.empty()) throw ConfigError("lambda bound needs a nonempty A family");
  if (!instance.space.two_uniformly_convex()) {
    throw ConfigError("an A family requires a 2-uniformly convex space (l_p with p <= 2)");
  }
  const double c = instance.space.convexity_constant();
  double gamma = std::numeric_limits<double>::infinity();
  for (const auto& A : instance.A) gamma = std::min(gamma, A.gamma());
  return c * c * gamma / 2.0;
}

ProblemInstance fill_defaults(ProblemInstance instance) {
  if (!instance.alpha) instance.alpha = Schedule::constant(0.5);
  if (!instance.r) instance.r = Schedule::constant(1.0);
  if (!instance.lambda) {
    instance.lambda = Schedule::constant(instance.A.empty() ? 0.0 : 0.5 * lambda_bound(instance));
  }
  if (instance.beta.empty() && !instance.eq.empty()) {
    instance.beta.assign(instance.eq.size(), 1.0 / static_cast<double>(instance.eq.size()));
  }
  return instance;
}

void validate_instance(const ProblemInstance& inst, std::size_t horizon) {
  const SpaceSpec& space = inst.space;
  space.check_dim(inst.C.dim(), "C");
  space.check_dim(inst.x0.size(), "x0");
  require(!inst.T.empty(), "the T family must have at least one member");
  require(!inst.eq.empty(), "at least one equilibrium problem is required");
  for (const auto& T : inst.T) {
    space.check_dim(T.dim(), "T family member");
    T.validate(space);
  }
  for (const auto& A : inst.A) space.check_dim(A.dim(), "A family member");
  for (const auto& e : inst.eq) {
    space.check_dim(e.f.dim(), "bifunction");
    space.check_dim(e.B.dim(), "B map");
  }

  require(inst.beta.size() == inst.eq.size(), "beta needs one weight per equilibrium problem");
  double sum = 0.0;
  for (double b : inst.beta) {
    require(b > 0.0, "beta weights must be positive");
    sum += b;
  }
  require(std::abs(sum - 1.0) <= 1e-12, "beta must sum to 1");

  require(inst.alpha && inst.lambda && inst.r, "schedules must be set before validation");
  const double amin = inst.alpha->min_over(horizon);
  const double amax = inst.alpha->max_over(horizon);
  require(amin > 0.0 && amax < 1.0, "alpha schedule must stay in (0, 1)");
  require(std::min(amin * (1.0 - amin), amax * (1.0 - amax)) > 0.0,
          "alpha schedule violates liminf alpha_n (1 - alpha_n) > 0");

  if (!inst.A.empty()) {
    const double bound = lambda_bound(inst);
    const double lo = inst.lambda->min_over(horizon);
    const double hi = inst.lambda->max_over(horizon);
    require(lo > 0.0 && hi < bound, "lambda schedule violates 0 < a <= lambda_n <= b < c^2*gamma/2 (a = " + fmt(lo) +
                                        ", b = " + fmt(hi) + ", c^2*gamma/2 = " + fmt(bound) + ")");
  }
  require(inst.r->min_over(horizon) > 0.0, "r schedule must be bounded below by a positive constant");

  const double tol = 1e-9 * (1.0 + inst.x0.norm());
  require(contains(inst.C, inst.x0, tol), "x0 must lie in C");
  if (inst.known_solution) {
    space.check_dim(inst.known_solution->size(), "known solution");
    require(contains(inst.C, *inst.known_solution, 1e-8 * (1.0 + inst.known_solution->norm())),
            "known solution must lie in C");
  }
  if (inst.anchor) space.check_dim(inst.anchor->size(), "anchor");
}

RunOutput run_hybrid(const ProblemInstance& instance, const SolverConfig& config) {
  require(instance.eq.size() == 2, "this runner needs exactly two equilibrium problems");
  return run_scheme(instance, config);
}

RunOutput run_hybrid_without_ism(const ProblemInstance& instance, const SolverConfig& config) {
  require(instance.A.empty(), "this runner needs an empty A family");
  require(instance.eq.size() == 2, "this runner needs exactly two equilibrium problems");
  return run_scheme(instance, config);
}

RunOutput run_hybrid_multi(const ProblemInstance& instance, const SolverConfig& config) {
  return run_scheme(instance, config);
}

HilbertComparison run_hilbert_specialization(const ProblemInstance& instance, const SolverConfig& config) {
  require(instance.space.is_hilbert(), "the Hilbert specialization needs a Hilbert space");
  HilbertComparison out;
  out.fast = run_scheme(instance, config);
  ProblemInstance twin = instance;
  twin.space = instance.space.generic_twin();
  out.generic = run_scheme(twin, config);
  const auto& a = out.fast.trace.steps;
  const auto& b = out.generic.trace.steps;
  bool agreeing = true;
  for (std::size_t n = 0; n < std::min(a.size(), b.size()); ++n) {
    const double gap = (a[n].x - b[n].x).norm();
    out.max_iterate_gap = std::max(out.max_iterate_gap, gap);
    agreeing = agreeing && gap <= kHilbertIterateTol;
    if (agreeing) ++out.agreeing_steps;
  }
  out.limit_gap = (out.fast.result.x - out.generic.result.x).norm();
  return out;
}

}  // namespace hybrid

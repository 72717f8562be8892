#include <algorithm>

#include "hybrid/hybrid_solver.hpp"

namespace hybrid {

namespace {

struct Baseline {
  ProblemInstance inst;

  const FixedPointMap& S() const { return inst.T.front(); }
  const IsmOperator* A() const { return inst.A.empty() ? nullptr : &inst.A.front(); }
};

Baseline prepare(const ProblemInstance& input, const SolverConfig& config) {
  if (!input.space.is_hilbert()) throw ConfigError("baseline schemes need a Hilbert space");
  if (config.max_iters < 1) throw ConfigError("max_iters must be at least 1");
  Baseline b{fill_defaults(input)};
  validate_instance(b.inst, static_cast<std::size_t>(config.max_iters));
  return b;
}

// S P_C(x - l A x), the common inner step of both baselines.
Vector inner_step(const Baseline& b, const Vector& x, std::size_t n) {
  Vector v = x;
  if (const IsmOperator* A = b.A()) v -= b.inst.lambda->at(n) * (*A)(x);
  return b.S()(b.inst.space, metric_project(b.inst.C, v));
}

template <typename Update>
RunOutput iterate(const Baseline& b, const SolverConfig& config, Update update) {
  RunOutput out;
  SolverResult& result = out.result;
  out.trace.unchecked_maps = !b.S().checked();
  Vector x = b.inst.x0;
  for (std::size_t n = 0; n < static_cast<std::size_t>(config.max_iters); ++n) {
    StepRecord rec;
    rec.n = n;
    rec.x = x;
    rec.phi_x0 = (x - b.inst.x0).squaredNorm();
    for (const auto& T : b.inst.T) rec.T_residuals.push_back((T(b.inst.space, x) - x).norm());
    for (const auto& A : b.inst.A) rec.A_residuals.push_back(A(x).norm());
    for (const auto& e : b.inst.eq) rec.gep_residuals.push_back(gep_residual(e.f, e.B, b.inst.C, x));
    auto mx = [](const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); };
    rec.max_T_residual = mx(rec.T_residuals);
    rec.max_A_residual = mx(rec.A_residuals);
    rec.max_gep_residual = mx(rec.gep_residuals);

    Vector next = update(x, n);
    rec.step_norm = (next - x).norm();
    result.iterations = n + 1;
    result.step_norm = rec.step_norm;
    result.max_T_residual = rec.max_T_residual;
    result.max_A_residual = rec.max_A_residual;
    result.max_gep_residual = rec.max_gep_residual;
    const bool converged = rec.step_norm <= config.tol && rec.max_T_residual <= config.tol &&
                           rec.max_A_residual <= config.tol && rec.max_gep_residual <= config.tol;
    out.trace.steps.push_back(std::move(rec));
    if (converged) {
      result.termination = Termination::converged;
      result.x = x;
      return out;
    }
    x = std::move(next);
  }
  result.termination = Termination::max_iters;
  result.message = "iteration cap reached";
  result.x = x;
  return out;
}

}  // namespace

RunOutput run_mann_baseline(const ProblemInstance& instance, const SolverConfig& config) {
  const Baseline b = prepare(instance, config);
  return iterate(b, config, [&](const Vector& x, std::size_t n) {
    const double a = b.inst.alpha->at(n);
    return Vector(a * x + (1.0 - a) * inner_step(b, x, n));
  });
}

RunOutput run_anchored_baseline(const ProblemInstance& instance, const SolverConfig& config) {
  const Baseline b = prepare(instance, config);
  const Schedule weight = instance.anchor_weight ? *instance.anchor_weight : Schedule::harmonic(1.0);
  if (!(weight.min_over(static_cast<std::size_t>(config.max_iters)) > 0.0) || !(weight.max_over(0) < 1.0)) {
    throw ConfigError("anchor weight schedule must stay in (0, 1)");
  }
  const Vector u = instance.anchor ? *instance.anchor : instance.x0;
  return iterate(b, config, [&](const Vector& x, std::size_t n) {
    const double a = b.inst.alpha->at(n);
    const double t = weight.at(n);
    return Vector(t * u + (1.0 - t) * (a * x + (1.0 - a) * inner_step(b, x, n)));
  });
}

}  // namespace hybrid

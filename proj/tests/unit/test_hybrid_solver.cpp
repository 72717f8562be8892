#include <doctest.h>

#include "hybrid/hybrid_solver.hpp"

using namespace hybrid;

namespace {

Vector v2(double a, double b) { return Eigen::Vector2d(a, b); }

EquilibriumPair zero_pair(Index n) { return {Bifunction::zero(n), MonotoneMap::zero(n)}; }

ProblemInstance make(SpaceSpec space, ConvexSet C, std::vector<FixedPointMap> T, std::vector<IsmOperator> A,
                     std::vector<EquilibriumPair> eq, Vector x0) {
  return ProblemInstance{std::move(space), std::move(C), std::move(T), std::move(A), std::move(eq), {}, {}, {}, {},
                         std::move(x0), {}, {}, {}};
}

Matrix line_x1_zero() {
  Matrix a(1, 2);
  a << 1.0, 0.0;
  return a;
}

}  // namespace

TEST_CASE("trivial instance stays put") {
  const auto inst = make(SpaceSpec::hilbert(2), ConvexSet::whole_space(2), {FixedPointMap::identity(2)},
                         {IsmOperator::make(MonotoneMap::zero(2))}, {zero_pair(2), zero_pair(2)}, v2(0.5, -1));
  const RunOutput out = run_hybrid(inst);
  CHECK(out.result.termination == Termination::converged);
  CHECK(out.result.iterations == 1);
  CHECK(out.result.x == inst.x0);
}

TEST_CASE("box and line instance converges to the projection of x0 onto the line") {
  const auto inst = make(SpaceSpec::hilbert(2), ConvexSet::cube(2, -2.0, 2.0),
                         {FixedPointMap::metric_projection(ConvexSet::affine(line_x1_zero(), Vector::Zero(1)))},
                         {IsmOperator::make(MonotoneMap::zero(2))}, {zero_pair(2), zero_pair(2)}, v2(1, 1));
  const RunOutput out = run_hybrid(inst);
  CHECK(out.result.termination == Termination::converged);
  CHECK((out.result.x - v2(0, 1)).norm() < 1e-5);
  CHECK(out.result.invariants_ok());
}

TEST_CASE("three separable problems with a common minimizer") {
  const Vector a = v2(0.7, -0.3);
  std::vector<EquilibriumPair> eq;
  for (const Matrix& H : {Matrix(v2(1, 0).asDiagonal()), Matrix(v2(0, 2).asDiagonal()), Matrix(Matrix::Identity(2, 2))}) {
    eq.push_back({Bifunction::separable(H, a), MonotoneMap::zero(2)});
  }
  const auto inst = make(SpaceSpec::hilbert(2), ConvexSet::cube(2, -3.0, 3.0), {FixedPointMap::identity(2)},
                         {IsmOperator::make(MonotoneMap::zero(2))}, eq, v2(2, 2));
  const RunOutput out = run_hybrid_multi(inst);
  CHECK(out.result.termination == Termination::converged);
  CHECK((out.result.x - a).norm() < 1e-5);
  CHECK(out.result.invariants_ok());
}

TEST_CASE("projection cost increases and the cut keeps the known solution") {
  auto inst = make(SpaceSpec::lp(2, 1.5), ConvexSet::cube(2, -2.0, 2.0), {FixedPointMap::identity(2)}, {},
                   {{Bifunction::separable(Matrix::Identity(2, 2), v2(0.5, 0.5)), MonotoneMap::zero(2)},
                    zero_pair(2)},
                   v2(-1, 1.5));
  inst.known_solution = Vector(v2(0.5, 0.5));
  const RunOutput out = run_hybrid_without_ism(inst);
  CHECK(out.result.termination == Termination::converged);
  CHECK(out.result.invariants_ok());
  for (std::size_t i = 1; i < out.trace.steps.size(); ++i) {
    CHECK(out.trace.steps[i].phi_x0 >= out.trace.steps[i - 1].phi_x0 - 1e-10);
    CHECK(out.trace.steps[i - 1].cut.excess(*inst.known_solution) <= 1e-8);
  }
}

TEST_CASE("infeasible cut injection stops the run") {
  const auto inst = make(SpaceSpec::hilbert(2), ConvexSet::whole_space(2), {FixedPointMap::identity(2)}, {},
                         {zero_pair(2), zero_pair(2)}, v2(0, 0));
  SolverConfig cfg;
  cfg.inject_infeasible_cut_at = 0;
  const RunOutput out = run_hybrid_without_ism(inst, cfg);
  CHECK(out.result.termination == Termination::infeasible_cut);
}

TEST_CASE("instance validation") {
  auto bad_beta = make(SpaceSpec::hilbert(2), ConvexSet::whole_space(2), {FixedPointMap::identity(2)}, {},
                       {zero_pair(2), zero_pair(2)}, v2(0, 0));
  bad_beta.beta = {0.3, 0.3};
  CHECK_THROWS_WITH_AS(validate_instance(fill_defaults(bad_beta), 10), doctest::Contains("beta must sum to 1"),
                       ConfigError);

  auto big_lambda = make(SpaceSpec::hilbert(2), ConvexSet::whole_space(2), {FixedPointMap::identity(2)},
                         {IsmOperator::make(MonotoneMap::affine(Matrix::Identity(2, 2), v2(0, 0)), 0.5)},
                         {zero_pair(2), zero_pair(2)}, v2(0, 0));
  big_lambda.lambda = Schedule::constant(0.25);
  CHECK_THROWS_AS(validate_instance(fill_defaults(big_lambda), 10), ConfigError);

  auto outside = make(SpaceSpec::hilbert(2), ConvexSet::cube(2, 0.0, 1.0), {FixedPointMap::identity(2)}, {},
                      {zero_pair(2), zero_pair(2)}, v2(2, 0));
  CHECK_THROWS_AS(validate_instance(fill_defaults(outside), 10), ConfigError);
}

TEST_CASE("defaults") {
  const auto inst = fill_defaults(make(SpaceSpec::lp(2, 1.5), ConvexSet::whole_space(2), {},
                                       {IsmOperator::make(MonotoneMap::zero(2), 0.5)},
                                       {zero_pair(2), zero_pair(2), zero_pair(2)}, v2(0, 0)));
  CHECK(inst.alpha->at(0) == 0.5);
  CHECK(inst.r->at(3) == 1.0);
  REQUIRE(inst.beta.size() == 3);
  CHECK(inst.beta[1] == doctest::Approx(1.0 / 3.0));
  CHECK(inst.lambda->at(0) == doctest::Approx(0.5 * lambda_bound(inst)));
  CHECK(lambda_bound(inst) == doctest::Approx(0.5 * 0.5 * 0.5));
}

TEST_CASE("baselines") {
  const auto still = make(SpaceSpec::hilbert(2), ConvexSet::cube(2, -1.0, 1.0), {FixedPointMap::identity(2)},
                          {IsmOperator::make(MonotoneMap::zero(2))}, {zero_pair(2), zero_pair(2)}, v2(0.2, 0.1));
  for (const RunOutput& out : {run_mann_baseline(still), run_anchored_baseline(still)}) {
    for (const auto& step : out.trace.steps) CHECK(step.x == still.x0);
  }

  const auto line = make(SpaceSpec::hilbert(2), ConvexSet::cube(2, -2.0, 2.0),
                         {FixedPointMap::metric_projection(ConvexSet::affine(line_x1_zero(), Vector::Zero(1)))},
                         {IsmOperator::make(MonotoneMap::zero(2))}, {zero_pair(2), zero_pair(2)}, v2(1.5, 1));
  const RunOutput mann = run_mann_baseline(line);
  CHECK(mann.result.termination == Termination::converged);
  CHECK(std::abs(mann.result.x(0)) < 1e-5);

  const auto zero = make(SpaceSpec::hilbert(2), ConvexSet::whole_space(2), {FixedPointMap::identity(2)},
                         {IsmOperator::make(MonotoneMap::affine(Matrix::Identity(2, 2), -v2(1, 2)))},
                         {zero_pair(2), zero_pair(2)}, v2(0, 0));
  const RunOutput grad = run_mann_baseline(zero);
  CHECK(grad.result.termination == Termination::converged);
  CHECK((grad.result.x - v2(1, 2)).norm() < 1e-5);
}

TEST_CASE("fast Hilbert path agrees with the general path") {
  const auto inst = make(SpaceSpec::hilbert(2), ConvexSet::cube(2, -3.0, 3.0),
                         {FixedPointMap::metric_projection(ConvexSet::affine(line_x1_zero(), Vector::Zero(1)))},
                         {IsmOperator::make(MonotoneMap::zero(2))},
                         {{Bifunction::separable(Matrix::Identity(2, 2), v2(0, 0.5)), MonotoneMap::zero(2)},
                          zero_pair(2)},
                         v2(2, 1));
  const HilbertComparison cmp = run_hilbert_specialization(inst);
  CHECK(cmp.fast.result.termination == Termination::converged);
  CHECK(cmp.generic.result.termination == Termination::converged);
  // Rounding differences in the cuts grow along the run on this instance, so
  // only the early iterates are compared tightly.
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK((cmp.fast.trace.steps[i].x - cmp.generic.trace.steps[i].x).norm() <= 1e-9);
  }
  CHECK((cmp.fast.result.x - v2(0, 0.5)).norm() < 1e-5);
  CHECK((cmp.generic.result.x - v2(0, 0.5)).norm() < 1e-5);
}

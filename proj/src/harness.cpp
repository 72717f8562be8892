#include "hybrid/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "hybrid/sampling.hpp"

namespace hybrid {

using ojson = nlohmann::ordered_json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_vector(const Vector& v, char sep) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += format_number(v[i]);
  }
  return out;
}

void write_trace_csv(std::ostream& out, const IterationTrace& trace) {
  out << kTraceHeader << '\n';
  for (const auto& s : trace.steps) {
    out << s.n << ',' << format_vector(s.x) << ',' << format_number(s.phi_x0) << ',' << format_number(s.step_norm)
        << ',' << format_number(s.max_T_residual) << ',' << format_number(s.max_A_residual) << ','
        << format_number(s.max_gep_residual) << ',' << (s.cut_feasible ? 1 : 0) << ',' << (s.invariants_ok ? 1 : 0)
        << '\n';
  }
}

// Oracle ---------------------------------------------------------------------

std::optional<ConvexSet> explicit_solution_set(const ProblemInstance& inst) {
  std::vector<ConvexSet> parts{inst.C};
  for (const auto& T : inst.T) {
    if (!T.fixed_set()) return std::nullopt;
    parts.push_back(*T.fixed_set());
  }
  for (const auto& A : inst.A) {
    auto zeros = A.zero_set();
    if (!zeros) return std::nullopt;
    parts.push_back(std::move(*zeros));
  }
  for (const auto& e : inst.eq) {
    auto sol = gep_solution_set(e.f, e.B, inst.C);
    if (!sol) return std::nullopt;
    parts.push_back(std::move(*sol));
  }
  try {
    return ConvexSet::intersection(std::move(parts), inst.known_solution);
  } catch (const ConfigError&) {
    return std::nullopt;
  }
}

namespace {

// Leaves of an intersection tree, with whole-space leaves dropped.
void flatten(const ConvexSet& set, std::vector<const ConvexSet*>& out) {
  if (const auto* in = std::get_if<ConvexSet::Intersection>(&set.variant())) {
    for (const auto& part : in->parts) flatten(part, out);
  } else if (!std::holds_alternative<ConvexSet::Whole>(set.variant())) {
    out.push_back(&set);
  }
}

// The single point of F when its affine constraints pin one down.
std::optional<Vector> pinned_point(const std::vector<const ConvexSet*>& leaves, Index dim) {
  Matrix A(0, dim);
  Vector b(0);
  for (const ConvexSet* leaf : leaves) {
    if (const auto* aff = std::get_if<ConvexSet::Affine>(&leaf->variant())) {
      Matrix A2(A.rows() + aff->A.rows(), dim);
      A2 << A, aff->A;
      Vector b2(b.size() + aff->b.size());
      b2 << b, aff->b;
      A = std::move(A2);
      b = std::move(b2);
    }
  }
  if (A.rows() < dim) return std::nullopt;
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  if (qr.rank() < dim) return std::nullopt;
  return Vector(qr.solve(b));
}

double total_residual(const ProblemInstance& inst, const Vector& x) {
  double r = distance(inst.C, x);
  for (const auto& T : inst.T) r = std::max(r, (T(inst.space, x) - x).norm());
  for (const auto& A : inst.A) r = std::max(r, dual_norm(inst.space, A(x)));
  for (const auto& e : inst.eq) r = std::max(r, gep_residual(e.f, e.B, inst.C, x));
  return r;
}

void grid_search(const ProblemInstance& inst, OracleReport& report) {
  const Index n = inst.space.dim();
  const int per_axis = n == 1 ? 4001 : n == 2 ? 401 : 61;
  Vector lo = inst.x0.array() - 5.0;
  Vector hi = inst.x0.array() + 5.0;
  if (auto box = inst.C.bounding_box()) {
    lo = box->lower.cwiseMax(lo);
    hi = box->upper.cwiseMin(hi);
  }
  const Vector h = (hi - lo) / (per_axis - 1);
  report.accuracy = h.norm();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    Vector z(n);
    for (Index i = 0; i < n; ++i) z[i] = lo[i] + h[i] * idx[static_cast<std::size_t>(i)];
    if (total_residual(inst, z) <= report.accuracy) {
      const double phi = lyapunov_phi(inst.space, z, inst.x0);
      if (phi < best) {
        best = phi;
        report.projection = z;
      }
    }
    Index i = 0;
    while (i < n && ++idx[static_cast<std::size_t>(i)] == per_axis) idx[static_cast<std::size_t>(i++)] = 0;
    if (i == n) break;
  }
  report.available = std::isfinite(best);
}

}  // namespace

OracleReport compute_oracle(const ProblemInstance& inst) {
  OracleReport report;
  const auto F = explicit_solution_set(inst);
  if (!F) {
    report.F_description = "not explicit";
    if (inst.space.dim() <= 3) {
      report.method = "brute-force-grid";
      grid_search(inst, report);
    }
    return report;
  }
  report.F_description = F->describe();
  std::vector<const ConvexSet*> leaves;
  flatten(*F, leaves);
  const Index n = inst.space.dim();
  if (auto point = pinned_point(leaves, n); point && contains(*F, *point, 1e-9 * (1.0 + point->norm()))) {
    report.method = "closed-form";
    report.projection = *point;
  } else if (leaves.size() <= 1 && inst.space.is_hilbert()) {
    report.method = "closed-form";
    report.projection = leaves.empty() ? inst.x0 : metric_project(*leaves.front(), inst.x0);
  } else {
    report.method = "QP-on-explicit-F";
    ProjectionOptions opts;
    opts.euclidean_tol = 1e-12;
    opts.bregman_tol = 1e-12;
    report.projection = gen_project(inst.space, *F, inst.x0, opts);
  }
  report.available = true;
  report.accuracy = 1e-10;
  return report;
}

// Experiments ----------------------------------------------------------------

ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
  ExperimentOutcome out;
  const ProblemInstance& inst = spec.instance;
  const SolverConfig& cfg = spec.config;
  switch (spec.runner) {
    case Runner::theorem1: out.run = run_hybrid(inst, cfg); break;
    case Runner::theorem2:
    case Runner::corollary39:
    case Runner::corollary40: out.run = run_hybrid_without_ism(inst, cfg); break;
    case Runner::theorem4: out.run = run_hybrid_multi(inst, cfg); break;
    case Runner::corollary41:
    case Runner::corollary42:
    case Runner::corollary43:
    case Runner::corollary44: {
      check_runner(inst, spec.runner);
      HilbertComparison cmp = run_hilbert_specialization(inst, cfg);
      out.hilbert_gap = cmp.max_iterate_gap;
      out.hilbert_agreeing_steps = cmp.agreeing_steps;
      out.hilbert_limit_gap = cmp.limit_gap;
      if (cmp.generic.result.termination != Termination::converged) {
        out.hilbert_limit_gap = std::numeric_limits<double>::infinity();
      }
      out.run = std::move(cmp.fast);
      break;
    }
    case Runner::baseline8: out.run = run_mann_baseline(inst, cfg); break;
    case Runner::baseline9: out.run = run_anchored_baseline(inst, cfg); break;
  }

  out.oracle = compute_oracle(inst);
  if (out.oracle.available) out.oracle.distance = (out.run.result.x - out.oracle.projection).norm();
  for (const auto& s : out.run.trace.steps) {
    ++out.oracle.steps_checked;
    if (!s.invariants_ok) ++out.oracle.steps_failed;
    for (const auto& name : s.failed_invariants) ++out.oracle.failures_by_invariant[name];
  }

  const bool gap_ok = !out.hilbert_limit_gap || *out.hilbert_limit_gap <= kHilbertLimitTol;
  const bool ok = out.run.result.termination == Termination::converged && out.run.result.invariants_ok() && gap_ok;
  out.exit_code = ok ? kExitOk : kExitSolver;

  if (!spec.outputs.trace.empty()) {
    std::ofstream f(spec.outputs.trace, std::ios::binary);
    if (!f) throw ConfigError("cannot write trace file " + spec.outputs.trace);
    write_trace_csv(f, out.run.trace);
  }
  if (!spec.outputs.summary.empty()) {
    std::ofstream f(spec.outputs.summary, std::ios::binary);
    if (!f) throw ConfigError("cannot write summary file " + spec.outputs.summary);
    f << summary_text(spec, out);
  }
  return out;
}

std::string summary_text(const ExperimentSpec& spec, const ExperimentOutcome& outcome) {
  const SolverResult& r = outcome.run.result;
  std::ostringstream os;
  auto kv = [&](const char* key, const std::string& value) { os << key << '=' << value << '\n'; };
  kv("source", spec.source);
  kv("runner", to_string(spec.runner));
  kv("space", spec.instance.space.describe());
  kv("termination", to_string(r.termination));
  kv("iterations", std::to_string(r.iterations));
  kv("x", format_vector(r.x));
  kv("step_norm", format_number(r.step_norm));
  kv("max_T_residual", format_number(r.max_T_residual));
  kv("max_A_residual", format_number(r.max_A_residual));
  kv("max_gep_residual", format_number(r.max_gep_residual));
  kv("invariant_checks", spec.config.invariant_checks ? "on" : "off");
  kv("invariant_failures", std::to_string(r.invariant_failures));
  for (const auto& [name, count] : outcome.oracle.failures_by_invariant) {
    kv("failed_invariant", name + ":" + std::to_string(count));
  }
  kv("unchecked_maps", outcome.run.trace.unchecked_maps ? "true" : "false");
  if (outcome.hilbert_gap) kv("hilbert_gap", format_number(*outcome.hilbert_gap));
  if (outcome.hilbert_agreeing_steps) kv("hilbert_agreeing_steps", std::to_string(*outcome.hilbert_agreeing_steps));
  if (outcome.hilbert_limit_gap) kv("hilbert_limit_gap", format_number(*outcome.hilbert_limit_gap));
  kv("F", outcome.oracle.F_description);
  if (outcome.oracle.available) {
    kv("oracle_method", outcome.oracle.method);
    kv("oracle_point", format_vector(outcome.oracle.projection));
    kv("oracle_accuracy", format_number(outcome.oracle.accuracy));
    kv("oracle_distance", format_number(outcome.oracle.distance));
  } else {
    kv("oracle_method", "none");
  }
  if (!r.message.empty()) kv("message", r.message);
  kv("exit_code", std::to_string(outcome.exit_code));
  return os.str();
}

// Instance generation --------------------------------------------------------

const char* to_string(InstanceTemplate t) {
  switch (t) {
    case InstanceTemplate::two_ep: return "two-ep";
    case InstanceTemplate::two_vi: return "two-vi";
    case InstanceTemplate::fp_only: return "fp-only";
    case InstanceTemplate::full_theorem1: return "full-theorem1";
    case InstanceTemplate::multi_q: return "multi-q";
  }
  return "unknown";
}

std::optional<InstanceTemplate> parse_template(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(InstanceTemplate::multi_q); ++i) {
    const auto t = static_cast<InstanceTemplate>(i);
    if (name == to_string(t)) return t;
  }
  return std::nullopt;
}

namespace {

ojson to_json(const Vector& v) {
  ojson a = ojson::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ojson to_json(const Matrix& m) {
  ojson a = ojson::array();
  for (Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vector(m.row(i).transpose())));
  return a;
}

// Builds the families slot by slot.  Each slot receives some of the planted
// directions and vanishes exactly on p* + span(directions)^perp.
class Planter {
 public:
  Planter(Rng& rng, const Vector& p, std::vector<std::vector<Vector>> slots) : rng_(rng), p_(p) {
    slots_ = std::move(slots);
  }

  //! PSD matrix sum_i s_i v_i v_i^T rescaled to lambda_max in [0.5, 1].
  Matrix psd(std::size_t slot) {
    const Index n = p_.size();
    Matrix H = Matrix::Zero(n, n);
    for (const auto& v : slots_[slot]) H += rng_.uniform(0.5, 1.0) * v * v.transpose();
    const double top = Eigen::SelfAdjointEigenSolver<Matrix>(H, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    return H * (rng_.uniform(0.5, 1.0) / top);
  }

  //! Affine map vanishing at p*: z -> H z - H p*.
  ojson affine_map(std::size_t slot) {
    const Matrix H = psd(slot);
    return ojson{{"type", "affine"}, {"Q", to_json(H)}, {"q", to_json(Vector(-(H * p_)))}};
  }

  //! Hyperplanes through p* normal to the slot directions, intersected with C.
  ojson flat_in_C(std::size_t slot, const ojson& C) {
    const auto& dirs = slots_[slot];
    Matrix A(static_cast<Index>(dirs.size()), p_.size());
    for (std::size_t i = 0; i < dirs.size(); ++i) A.row(static_cast<Index>(i)) = dirs[i].transpose();
    ojson affine{{"type", "affine"}, {"A", to_json(A)}, {"b", to_json(Vector(A * p_))}};
    return ojson{{"type", "intersection"}, {"parts", ojson::array({affine, C})}, {"witness", to_json(p_)}};
  }

 private:
  Rng& rng_;
  Vector p_;
  std::vector<std::vector<Vector>> slots_;
};

}  // namespace

std::string generate_instance(std::uint64_t seed, InstanceTemplate tmpl, const GenerateOptions& options) {
  const Index n = options.dim;
  if (n < 2) throw ConfigError("generated instances need dimension at least 2");
  const bool lp = options.p.has_value();
  if (lp && !(*options.p > 1.0)) throw ConfigError("l_p exponent must exceed 1");
  if (lp && *options.p > 2.0 && (tmpl == InstanceTemplate::full_theorem1 || tmpl == InstanceTemplate::multi_q)) {
    throw ConfigError(std::string("template ") + to_string(tmpl) + " has an A family and needs p <= 2");
  }

  Rng rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(tmpl) + 1);
  const Vector p = rng.uniform_vector(n, -1.0, 1.0);
  const Vector x0 = rng.uniform_vector(n, -3.0, 3.0);
  const bool point = seed % 4 == 0;

  // Number of constraint slots of each kind, in the order they are built.
  std::size_t t_slots = 1, a_slots = 0, eq_slots = 2;
  switch (tmpl) {
    case InstanceTemplate::fp_only: t_slots = 2; eq_slots = 0; break;
    case InstanceTemplate::two_ep:
    case InstanceTemplate::two_vi: break;
    case InstanceTemplate::full_theorem1: t_slots = 2; a_slots = 2; break;
    case InstanceTemplate::multi_q: a_slots = 1; eq_slots = 3; break;
  }
  const std::size_t total = t_slots + a_slots + eq_slots;
  const std::size_t pool_size = point ? static_cast<std::size_t>(n) : std::max<std::size_t>(1, n - 2);
  // Orthonormal directions keep the planted constraints well conditioned.
  Matrix gauss(n, n);
  for (Index j = 0; j < n; ++j) gauss.col(j) = rng.unit_vector(n);
  const Matrix Q = Eigen::HouseholderQR<Matrix>(gauss).householderQ();
  std::vector<Vector> pool;
  for (std::size_t i = 0; i < pool_size; ++i) pool.push_back(Q.col(static_cast<Index>(i)));
  std::vector<std::vector<Vector>> slots(total);
  for (std::size_t i = 0; i < std::max(total, pool_size); ++i) {
    slots[std::min(i, total - 1) % total].push_back(pool[i % pool_size]);
  }
  Planter planter(rng, p, slots);

  const ojson C{{"type", "cube"}, {"lower", -3.0}, {"upper", 3.0}};
  const char* projection = lp ? "generalized_projection" : "metric_projection";
  std::size_t slot = 0;

  ojson T = ojson::array();
  for (std::size_t j = 0; j < t_slots; ++j) {
    ojson map{{"type", projection}, {"set", planter.flat_in_C(slot++, C)}};
    if (j == 1) map = ojson{{"type", "averaged"}, {"t", 0.5}, {"inner", map}};
    T.push_back(map);
  }
  ojson A = ojson::array();
  for (std::size_t i = 0; i < a_slots; ++i) A.push_back(ojson{{"map", planter.affine_map(slot++)}});

  const ojson zero{{"type", "zero"}};
  ojson eq = ojson::array();
  ojson beta;
  switch (tmpl) {
    case InstanceTemplate::fp_only:
      eq.push_back(ojson{{"f", zero}, {"B", zero}});
      eq.push_back(ojson{{"f", zero}, {"B", zero}});
      break;
    case InstanceTemplate::two_ep:
    case InstanceTemplate::multi_q:
      for (std::size_t k = 0; k < eq_slots; ++k) {
        const Matrix H = planter.psd(slot++);
        eq.push_back(ojson{{"f", {{"type", "separable"}, {"H", to_json(H)}, {"a", to_json(p)}}}, {"B", zero}});
      }
      if (tmpl == InstanceTemplate::multi_q) beta = ojson::array({0.2, 0.3, 0.5});
      break;
    case InstanceTemplate::two_vi:
      for (std::size_t k = 0; k < 2; ++k) eq.push_back(ojson{{"f", zero}, {"B", planter.affine_map(slot++)}});
      break;
    case InstanceTemplate::full_theorem1: {
      const Matrix H = planter.psd(slot++);
      eq.push_back(ojson{{"f", {{"type", "separable"}, {"H", to_json(H)}, {"a", to_json(p)}}}, {"B", zero}});
      // A vi bifunction and a B map built on the same directions.
      const Matrix G = planter.psd(slot);
      const Matrix B = planter.psd(slot++);
      const ojson g_map{{"type", "affine"}, {"Q", to_json(G)}, {"q", to_json(Vector(-(G * p)))}};
      const ojson b_map{{"type", "affine"}, {"Q", to_json(B)}, {"q", to_json(Vector(-(B * p)))}};
      eq.push_back(ojson{{"f", {{"type", "vi"}, {"G", g_map}}}, {"B", b_map}});
      break;
    }
  }

  ojson doc;
  doc["space"] = lp ? ojson{{"kind", "lp"}, {"dim", n}, {"p", *options.p}} : ojson{{"kind", "hilbert"}, {"dim", n}};
  doc["set"] = C;
  ojson families{{"T", T}};
  if (!A.empty()) families["A"] = A;
  families["eq"] = eq;
  if (!beta.is_null()) families["beta"] = beta;
  doc["families"] = families;
  const char* runner = "theorem2";
  if (tmpl == InstanceTemplate::full_theorem1) runner = "theorem1";
  if (tmpl == InstanceTemplate::multi_q) runner = "theorem4";
  doc["runner"] = runner;
  doc["config"] = ojson{{"tol", 1e-6}, {"max_iters", 10000}, {"seed", seed}};
  doc["x0"] = to_json(x0);
  doc["known_solution"] = to_json(p);
  return doc.dump(2) + "\n";
}

}  // namespace hybrid

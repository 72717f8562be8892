//! Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "hybrid/harness.hpp"
#include "hybrid/properties.hpp"

#ifndef HYBRIDPROJ_PATH
#error "HYBRIDPROJ_PATH must name the CLI binary"
#endif
#ifndef HYBRID_TEST_DATA
#error "HYBRID_TEST_DATA must name tests/data"
#endif

using namespace hybrid;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

//! Collects the reasons a criterion failed.
struct Verdict {
  std::vector<std::string> failures;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

bool report(int number, const std::string& title, double limit_s, const std::function<void(Verdict&)>& body) {
  Verdict v;
  const auto start = Clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.failures.push_back(std::string("exception: ") + e.what());
  }
  const double t = seconds_since(start);
  if (t >= limit_s) {
    std::ostringstream os;
    os << "took " << t << " s, limit " << limit_s << " s";
    v.failures.push_back(os.str());
  }
  const bool ok = v.failures.empty();
  std::printf("%s %d %s (%.2f s)%s%s\n", ok ? "PASS" : "FAIL", number, title.c_str(), t,
              v.detail.empty() ? "" : ": ", v.detail.c_str());
  for (const auto& f : v.failures) std::printf("     - %s\n", f.c_str());
  std::fflush(stdout);
  return ok;
}

void require_suite(Verdict& v, PropertyModule module) {
  const SuiteReport suite = run_property_suite(module, 1);
  std::ostringstream os;
  os << suite.results.size() << " properties";
  v.detail = os.str();
  for (const auto& r : suite.results) {
    std::ostringstream f;
    f << r.name << ": " << r.report.violations << " of " << r.report.samples << " samples violate, worst margin "
      << r.report.worst_margin;
    if (!r.report.note.empty()) f << " [" << r.report.note << "]";
    v.require(r.passed(), f.str());
  }
}

double final_residual(const SolverResult& r) {
  return std::max({r.max_T_residual, r.max_A_residual, r.max_gep_residual});
}

ExperimentSpec generated(std::uint64_t seed, InstanceTemplate t, GenerateOptions opts = {}) {
  return parse_experiment(generate_instance(seed, t, opts), std::string(to_string(t)) + "#" + std::to_string(seed));
}

// Trace-side recomputation of the per-step invariants, with p* as the known point.
void check_trace_invariants(Verdict& v, const ExperimentSpec& spec, const IterationTrace& trace,
                            const std::string& tag) {
  const ProblemInstance& inst = spec.instance;
  const SpaceSpec& s = inst.space;
  const Vector& p = *inst.known_solution;
  const double c = s.convexity_constant();
  double b = 0.0;
  if (inst.lambda) b = inst.lambda->max_over(trace.steps.size() + 1);
  double prev_phi = -1.0;
  std::size_t bad = 0;
  for (const auto& st : trace.steps) {
    const double scale = 1.0 + lyapunov_phi(s, p, st.x);
    if (lyapunov_phi(s, p, st.w) > lyapunov_phi(s, p, st.x) + 1e-8 * scale) ++bad;
    if (st.phi_x0 < prev_phi - 1e-8 * (1.0 + prev_phi)) ++bad;
    prev_phi = st.phi_x0;
    if (!inst.A.empty()) {
      const auto& A = inst.A[st.n % inst.A.size()];
      const double bound = 4.0 * b * b / (c * c) * A(st.x).squaredNorm();
      if (lyapunov_phi(s, st.x, st.z) > bound + 1e-8) ++bad;
    }
    if (!st.invariants_ok) ++bad;
  }
  v.require(bad == 0, tag + ": " + std::to_string(bad) + " invariant violations");
}

// Runs the CLI, capturing stdout and stderr in files; returns the exit status.
struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

CliResult cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd =
      std::string("\"") + HYBRIDPROJ_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  CliResult r;
#ifdef WEXITSTATUS
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#else
  r.code = status;
#endif
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

}  // namespace

int main() {
  const fs::path data = HYBRID_TEST_DATA;
  const fs::path work = fs::temp_directory_path() / ("hybrid_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(work);
  bool all = true;

  all &= report(1, "geometry suite", 1.0, [](Verdict& v) { require_suite(v, PropertyModule::space_geometry); });

  all &= report(2, "projection suite", 5.0, [](Verdict& v) { require_suite(v, PropertyModule::convex_sets); });

  all &= report(3, "resolvent suite", 10.0, [](Verdict& v) { require_suite(v, PropertyModule::resolvent); });

  all &= report(4, "full scheme on 20 generated Hilbert instances", 60.0, [](Verdict& v) {
    double worst_residual = 0.0;
    double worst_distance = 0.0;
    int closed_form = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const ExperimentSpec spec = generated(seed, InstanceTemplate::full_theorem1);
      const std::string tag = "seed " + std::to_string(seed);
      v.require(spec.instance.space.kind() == SpaceKind::hilbert && spec.instance.x0.size() == 5,
                tag + ": not a Hilbert instance of dimension 5");
      const ExperimentOutcome out = run_experiment(spec);
      const SolverResult& r = out.run.result;
      v.require(r.termination == Termination::converged && r.iterations <= 10000, tag + ": did not converge");
      v.require(r.invariants_ok(), tag + ": solver reported invariant failures");
      worst_residual = std::max(worst_residual, final_residual(r));
      v.require(final_residual(r) <= 1e-6, tag + ": residual above 1e-6");
      check_trace_invariants(v, spec, out.run.trace, tag);
      if (seed % 4 == 0) {
        // F = {p*}: the projection of x0 onto F is p* itself.
        ++closed_form;
        const double d = (r.x - *spec.instance.known_solution).norm();
        worst_distance = std::max(worst_distance, d);
        v.require(d <= 1e-5, tag + ": limit is " + std::to_string(d) + " from the projection onto F");
        v.require(out.oracle.available && out.oracle.method == "closed-form",
                  tag + ": harness oracle did not use the closed form");
      }
    }
    v.require(closed_form == 5, "expected 5 closed-form instances");
    std::ostringstream os;
    os << "worst residual " << worst_residual << ", worst closed-form distance " << worst_distance;
    v.detail = os.str();
  });

  all &= report(5, "multi-problem, Hilbert shortcut and specialized runners", 60.0, [](Verdict& v) {
    {
      const ExperimentSpec spec = generated(3, InstanceTemplate::full_theorem1);
      const RunOutput a = run_hybrid(spec.instance, spec.config);
      const RunOutput b = run_hybrid_multi(spec.instance, spec.config);
      v.require(a.trace.steps.size() == b.trace.steps.size(), "q = 2 run length differs");
      double gap = 0.0;
      for (std::size_t i = 0; i < std::min(a.trace.steps.size(), b.trace.steps.size()); ++i) {
        gap = std::max(gap, (a.trace.steps[i].x - b.trace.steps[i].x).norm());
      }
      v.require(gap <= 1e-9, "q = 2 iterate gap " + std::to_string(gap));
    }
    double worst_gap = 0.0;
    double worst_limit_gap = 0.0;
    std::string agreement;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const ExperimentSpec spec = generated(seed, InstanceTemplate::full_theorem1);
      const HilbertComparison cmp = run_hilbert_specialization(spec.instance, spec.config);
      const std::string tag = "seed " + std::to_string(seed);
      worst_gap = std::max(worst_gap, cmp.max_iterate_gap);
      worst_limit_gap = std::max(worst_limit_gap, cmp.limit_gap);
      agreement += (agreement.empty() ? "" : ", ") + std::to_string(cmp.agreeing_steps) + "/" +
                   std::to_string(cmp.fast.trace.steps.size());
      v.require(cmp.fast.trace.steps.size() == cmp.generic.trace.steps.size(),
                tag + ": fast and general runs take " + std::to_string(cmp.fast.trace.steps.size()) + " and " +
                    std::to_string(cmp.generic.trace.steps.size()) + " steps");
      std::ostringstream os;
      os << tag << ": per-iterate gap " << cmp.max_iterate_gap << " exceeds 1e-9 after step "
         << cmp.agreeing_steps << " (limits " << cmp.limit_gap << " apart)";
      v.require(cmp.max_iterate_gap <= 1e-9, os.str());
    }
    const std::pair<Runner, InstanceTemplate> configs[] = {
        {Runner::corollary39, InstanceTemplate::two_ep},        {Runner::corollary40, InstanceTemplate::two_vi},
        {Runner::corollary41, InstanceTemplate::full_theorem1}, {Runner::corollary42, InstanceTemplate::two_ep},
        {Runner::corollary43, InstanceTemplate::two_vi},        {Runner::corollary44, InstanceTemplate::two_ep},
    };
    int runs = 0;
    for (const auto& [runner, tmpl] : configs) {
      for (std::uint64_t seed = 0; seed < 2; ++seed) {
        ExperimentSpec spec = generated(seed, tmpl);
        spec.runner = runner;
        check_runner(spec.instance, runner);
        const ExperimentOutcome out = run_experiment(spec);
        const std::string tag = std::string(to_string(runner)) + " seed " + std::to_string(seed);
        v.require(out.exit_code == kExitOk, tag + ": exit code " + std::to_string(out.exit_code));
        v.require(out.run.result.termination == Termination::converged, tag + ": did not converge");
        v.require(final_residual(out.run.result) <= 1e-6, tag + ": residual above 1e-6");
        ++runs;
      }
    }
    std::ostringstream os;
    os << "fast path: iterates agreeing to 1e-9 per seed " << agreement << ", worst gap " << worst_gap
       << ", worst limit gap " << worst_limit_gap << "; " << runs << " specialized runs";
    v.detail = os.str();
  });

  all &= report(6, "l_p end-to-end", 30.0, [](Verdict& v) {
    const ExperimentSpec spec = generated(1, InstanceTemplate::two_ep, GenerateOptions{5, 1.5});
    const ProblemInstance& inst = spec.instance;
    v.require(inst.space.kind() == SpaceKind::lp && inst.space.p() == 1.5, "not an l_1.5 instance");
    v.require(inst.eq.size() == 2 && inst.eq[0].f.kind() == Bifunction::Kind::separable &&
                  inst.eq[1].f.kind() == Bifunction::Kind::separable,
              "expected two separable bifunctions");
    v.require(inst.T.size() == 1, "expected one projection-type map");
    v.require(spec.runner == Runner::theorem2, "expected the runner without the A family");
    const ExperimentOutcome out = run_experiment(spec);
    v.require(out.run.result.termination == Termination::converged, "did not converge");
    v.require(final_residual(out.run.result) <= 1e-5, "residual above 1e-5");
    v.require(out.run.result.invariants_ok(), "invariant failures");
    check_trace_invariants(v, spec, out.run.trace, "l_1.5");
    std::ostringstream os;
    os << out.run.result.iterations << " iterations, residual " << final_residual(out.run.result)
       << ", distance to p* " << (out.run.result.x - *inst.known_solution).norm();
    v.detail = os.str();
  });

  all &= report(7, "baselines and reference trace", 10.0, [&](Verdict& v) {
    const ExperimentSpec spec = load_experiment(data / "affine_zero.json");
    const Vector target = *spec.instance.known_solution;
    for (Runner runner : {Runner::baseline8, Runner::baseline9}) {
      ExperimentSpec s = spec;
      s.runner = runner;
      const ExperimentOutcome out = run_experiment(s);
      double prev = std::numeric_limits<double>::infinity();
      std::size_t rises = 0;
      for (const auto& st : out.run.trace.steps) {
        const double d = (st.x - target).norm();
        if (d > prev + 1e-12) ++rises;
        prev = d;
      }
      v.require(out.run.trace.steps.size() > 1, std::string(to_string(runner)) + ": empty trace");
      v.require(rises == 0, std::string(to_string(runner)) + ": distance rose " + std::to_string(rises) + " times");
    }
    const std::string ref = slurp(data / "affine_zero_reference.csv");
    const std::size_t ref_rows = static_cast<std::size_t>(std::count(ref.begin(), ref.end(), '\n')) - 1;
    const ExperimentOutcome hybrid = run_experiment(spec);
    v.require(hybrid.run.result.termination == Termination::converged, "hybrid run did not converge");
    v.require(hybrid.run.result.iterations <= ref_rows,
              "hybrid took " + std::to_string(hybrid.run.result.iterations) + " iterations, reference " +
                  std::to_string(ref_rows));
    v.detail = "hybrid " + std::to_string(hybrid.run.result.iterations) + " iterations, reference " +
               std::to_string(ref_rows);
  });

  all &= report(8, "determinism and CLI contract", 5.0, [&](Verdict& v) {
    const fs::path problem = work / "gen.json";
    const fs::path problem2 = work / "gen2.json";
    v.require(cli("gen --template two-ep --seed 7 --dim 3 --out \"" + problem.string() + "\"", work).code == 0,
              "gen failed");
    v.require(cli("gen --template two-ep --seed 7 --dim 3 --out \"" + problem2.string() + "\"", work).code == 0,
              "second gen failed");
    v.require(slurp(problem) == slurp(problem2) && !slurp(problem).empty(), "generated files differ");

    std::string traces[2];
    std::string summaries[2];
    for (int k = 0; k < 2; ++k) {
      const fs::path trace = work / ("trace" + std::to_string(k) + ".csv");
      const CliResult r = cli("run --trace \"" + trace.string() + "\" \"" + problem.string() + "\"", work);
      v.require(r.code == 0, "run exit code " + std::to_string(r.code));
      traces[k] = slurp(trace);
      summaries[k] = r.out;
    }
    v.require(!traces[0].empty() && traces[0] == traces[1], "trace bytes differ across runs");
    v.require(traces[0].rfind(std::string(kTraceHeader) + "\n", 0) == 0, "trace header mismatch");
    v.require(summaries[0] == summaries[1], "summaries differ across runs");

    const CliResult trivial = cli("run \"" + (data / "trivial.json").string() + "\"", work);
    v.require(trivial.code == kExitOk, "trivial instance exit code " + std::to_string(trivial.code));
    v.require(trivial.out.find("iterations=1\n") != std::string::npos, "trivial instance took more than 1 step");

    const CliResult beta = cli("run \"" + (data / "bad_beta.json").string() + "\"", work);
    v.require(beta.code == kExitValidation, "bad beta exit code " + std::to_string(beta.code));
    v.require(beta.err.find("bad_beta.json:8: /families/beta: beta must sum to 1") != std::string::npos,
              "bad beta message: " + beta.err);

    const CliResult lambda = cli("verify \"" + (data / "bad_lambda.json").string() + "\"", work);
    v.require(lambda.code == kExitValidation, "bad lambda exit code " + std::to_string(lambda.code));
    v.require(lambda.err.find("lambda schedule violates") != std::string::npos, "bad lambda message: " + lambda.err);

    const fs::path injected = work / "injected.json";
    {
      std::string text = slurp(data / "box_line.json");
      const std::string key = "\"runner\": \"theorem1\",";
      text.replace(text.find(key), key.size(), key + "\n  \"config\": {\"inject_infeasible_cut_at\": 2},");
      std::ofstream(injected) << text;
    }
    const CliResult inj = cli("run \"" + injected.string() + "\"", work);
    v.require(inj.code == kExitSolver, "injected cut exit code " + std::to_string(inj.code));
    v.require(inj.out.find("termination=infeasible_cut") != std::string::npos, "injected cut termination");

    const CliResult capped = cli("run --quiet --max-iters 2 \"" + (data / "affine_zero.json").string() + "\"", work);
    v.require(capped.code == kExitSolver, "iteration cap exit code " + std::to_string(capped.code));

    const CliResult missing = cli("run \"" + (work / "missing.json").string() + "\"", work);
    v.require(missing.code == kExitValidation, "missing file exit code " + std::to_string(missing.code));
    const CliResult usage = cli("frobnicate", work);
    v.require(usage.code == kExitValidation, "unknown verb exit code " + std::to_string(usage.code));
  });

  std::error_code ec;
  fs::remove_all(work, ec);
  return all ? 0 : 1;
}

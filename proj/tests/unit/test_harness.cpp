#include <doctest.h>

#include <sstream>

#include "hybrid/harness.hpp"

using namespace hybrid;

namespace {

const char* kMinimal = R"({
  "space": {"kind": "hilbert", "dim": 2},
  "x0": [0, 0]
})";

std::string reason_of(const std::string& text) {
  try {
    (void)parse_experiment(text, "t.json");
  } catch (const LoadError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal file gets defaults") {
  const ExperimentSpec spec = parse_experiment(kMinimal, "t.json");
  CHECK(spec.instance.alpha.has_value());
  CHECK(spec.instance.r.has_value());
  CHECK(spec.config.tol == 1e-6);
  CHECK(spec.config.max_iters == 10000);
  CHECK(spec.config.invariant_checks);
}

TEST_CASE("error messages carry file, line, pointer and reason") {
  const std::string beta = reason_of(R"({
  "space": {"kind": "hilbert", "dim": 2},
  "families": {
    "eq": [{"f": {"type": "zero"}}, {"f": {"type": "zero"}}],
    "beta": [0.3, 0.3]
  },
  "x0": [0, 0]
})");
  CHECK(beta == "t.json:5: /families/beta: beta must sum to 1");

  const std::string lambda = reason_of(R"({
  "space": {"kind": "hilbert", "dim": 2},
  "families": {"A": [{"map": {"type": "affine", "Q": [[1, 0], [0, 1]], "q": [0, 0]}, "gamma": 0.5}]},
  "schedules": {"lambda": {"const": 0.5}},
  "x0": [0, 0]
})");
  CHECK(lambda.find("t.json:4: /schedules/lambda: lambda schedule violates") == 0);
  CHECK(lambda.find("c^2*gamma/2 = 0.25") != std::string::npos);

  CHECK(reason_of(R"({"space": {"kind": "hilbert", "dim": 2}, "x0": [0, 0], "extra": 1})").find("extra") !=
        std::string::npos);
  CHECK(reason_of(R"({"space": {"kind": "hilbert", "dim": 2}, "x0": [0]})").find("/x0") != std::string::npos);
  CHECK(reason_of("{ not json").find("t.json:1") == 0);
  CHECK(reason_of(R"({"space": {"kind": "lp", "dim": 2, "p": 3}, "families": {"A": [{"map": {"type": "zero"}}]},
  "runner": "theorem1", "x0": [0, 0]})")
            .find("/families/A: an A family requires a 2-uniformly convex space") != std::string::npos);
}

TEST_CASE("trivial run: one iteration, limit x0, exit 0") {
  const ExperimentSpec spec = parse_experiment(R"({
  "space": {"kind": "hilbert", "dim": 2},
  "families": {"T": [{"type": "identity"}]},
  "x0": [0.5, -0.25]
})");
  const ExperimentOutcome out = run_experiment(spec);
  CHECK(out.exit_code == kExitOk);
  CHECK(out.run.result.iterations == 1);
  CHECK(out.run.result.x == spec.instance.x0);
}

TEST_CASE("trace CSV layout") {
  const ExperimentSpec spec = parse_experiment(generate_instance(2, InstanceTemplate::two_ep, {3, {}}));
  const ExperimentOutcome out = run_experiment(spec);
  std::ostringstream os;
  write_trace_csv(os, out.run.trace);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == kTraceHeader);
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 8);
  }
  CHECK(rows == out.run.trace.steps.size());
}

TEST_CASE("number formatting round trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 1e300, 0.0, 123456789.123}) {
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_vector(Eigen::Vector2d(1, -2)) == "1;-2");
}

TEST_CASE("generated instances") {
  const std::string a = generate_instance(0, InstanceTemplate::fp_only);
  CHECK(a == generate_instance(0, InstanceTemplate::fp_only));
  CHECK(a != generate_instance(1, InstanceTemplate::fp_only));
  const ExperimentSpec fp = parse_experiment(a);
  REQUIRE(fp.instance.known_solution.has_value());
  for (const auto& T : fp.instance.T) {
    CHECK((T(fp.instance.space, *fp.instance.known_solution) - *fp.instance.known_solution).norm() <= 1e-12);
  }
  const ExperimentSpec full = parse_experiment(generate_instance(1, InstanceTemplate::full_theorem1));
  CHECK(full.runner == Runner::theorem1);
  CHECK(parse_experiment(generate_instance(3, InstanceTemplate::multi_q)).runner == Runner::theorem4);
  const ExperimentSpec lp = parse_experiment(generate_instance(5, InstanceTemplate::two_ep, {4, 1.5}));
  CHECK(lp.instance.space.kind() == SpaceKind::lp);
}

TEST_CASE("oracle on closed-form instances") {
  const ExperimentSpec spec = parse_experiment(generate_instance(4, InstanceTemplate::full_theorem1));
  const OracleReport o = compute_oracle(spec.instance);
  REQUIRE(o.available);
  CHECK(o.method == "closed-form");
  CHECK((o.projection - *spec.instance.known_solution).norm() < 1e-12);
}

TEST_CASE("summary is key=value lines") {
  const ExperimentSpec spec = parse_experiment(kMinimal);
  const std::string text = summary_text(spec, run_experiment(spec));
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) CHECK(line.find('=') != std::string::npos);
  CHECK(text.find("termination=converged") != std::string::npos);
}

TEST_CASE("runner names") {
  for (const char* name : {"theorem1", "theorem2", "theorem4", "corollary39", "corollary44", "baseline8", "baseline9"}) {
    const auto r = parse_runner(name);
    REQUIRE(r.has_value());
    CHECK(std::string(to_string(*r)) == name);
  }
  CHECK_FALSE(parse_runner("theorem3").has_value());
}

//! hybridproj: run, generate, verify and property-check problem files.

#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hybrid/harness.hpp"
#include "hybrid/problem_io.hpp"
#include "hybrid/properties.hpp"

namespace {

using namespace hybrid;

struct CommonFlags {
  std::optional<double> tol;
  std::optional<std::size_t> max_iters;
  std::string trace;
  bool quiet = false;
};

void apply_overrides(ExperimentSpec& spec, const CommonFlags& flags) {
  if (flags.tol) spec.config.tol = *flags.tol;
  if (flags.max_iters) spec.config.max_iters = *flags.max_iters;
  if (!flags.trace.empty()) spec.outputs.trace = flags.trace;
}

//! Result of one `run` file: the exit code plus the text destined for each stream.
struct FileRun {
  int exit_code = kExitOk;
  std::string out;
  std::string err;
};

FileRun run_file(const std::string& path, const CommonFlags& flags) {
  FileRun fr;
  std::optional<ExperimentSpec> spec;
  try {
    spec.emplace(load_experiment(path));
    apply_overrides(*spec, flags);
    if (flags.tol && !(*flags.tol > 0.0)) throw ConfigError("--tol must be positive");
    if (flags.max_iters && *flags.max_iters == 0) throw ConfigError("--max-iters must be at least 1");
  } catch (const std::invalid_argument& e) {
    fr.exit_code = kExitValidation;
    fr.err = std::string(e.what()) + '\n';
    return fr;
  }
  try {
    const ExperimentOutcome outcome = run_experiment(*spec);
    fr.exit_code = outcome.exit_code;
    if (!flags.quiet) fr.out = summary_text(*spec, outcome);
    if (outcome.exit_code != kExitOk) {
      fr.err = path + ": termination " + to_string(outcome.run.result.termination) + '\n';
    }
  } catch (const std::exception& e) {
    fr.exit_code = kExitSolver;
    fr.err = path + ": " + e.what() + '\n';
  }
  return fr;
}

int cmd_run(const std::vector<std::string>& files, const CommonFlags& flags) {
  if (files.size() > 1 && !flags.trace.empty()) {
    std::cerr << "--trace names one file; give each problem its own outputs.trace instead\n";
    return kExitValidation;
  }
  std::vector<std::future<FileRun>> jobs;
  jobs.reserve(files.size());
  for (const auto& f : files) jobs.push_back(std::async(std::launch::async, run_file, f, flags));
  int worst = kExitOk;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const FileRun fr = jobs[i].get();
    if (files.size() > 1 && !fr.out.empty()) std::cout << "# " << files[i] << '\n';
    std::cout << fr.out;
    std::cerr << fr.err;
    worst = std::max(worst, fr.exit_code);
  }
  return worst;
}

int cmd_gen(const std::string& tmpl_name, std::uint64_t seed, const std::string& out, Index dim,
            std::optional<double> p) {
  const auto tmpl = parse_template(tmpl_name);
  if (!tmpl) {
    std::cerr << "unknown template '" << tmpl_name << "' (two-ep, two-vi, fp-only, full-theorem1, multi-q)\n";
    return kExitValidation;
  }
  GenerateOptions opts;
  opts.dim = dim;
  opts.p = p;
  std::string text;
  try {
    text = generate_instance(seed, *tmpl, opts);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << '\n';
    return kExitValidation;
  }
  if (out.empty() || out == "-") {
    std::cout << text;
    return kExitOk;
  }
  std::ofstream f(out, std::ios::binary);
  f << text;
  if (!f) {
    std::cerr << "cannot write " << out << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

int cmd_verify(const std::string& path, const CommonFlags& flags) {
  try {
    ExperimentSpec spec = load_experiment(path);
    apply_overrides(spec, flags);
    check_runner(spec.instance, spec.runner);
    if (!flags.quiet) {
      std::cout << "file=" << path << "\nrunner=" << to_string(spec.runner) << "\ndim=" << spec.instance.x0.size()
                << "\nstatus=valid\n";
    }
    return kExitOk;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << '\n';
    return kExitValidation;
  }
}

int cmd_props(const std::string& module, std::uint64_t seed, bool quiet) {
  std::vector<PropertyModule> modules;
  if (module == "all") {
    modules.assign(std::begin(kAllModules), std::end(kAllModules));
  } else if (const auto m = parse_module(module)) {
    modules.push_back(*m);
  } else {
    std::cerr << "unknown module '" << module << "'\n";
    return kExitValidation;
  }
  bool ok = true;
  for (PropertyModule m : modules) {
    const SuiteReport suite = run_property_suite(m, seed);
    ok = ok && suite.passed();
    if (!quiet || !suite.passed()) print_suite(std::cout, suite);
  }
  return ok ? kExitOk : kExitSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid projection solver for common fixed-point, zero and equilibrium problems"};
  app.require_subcommand(1);

  CommonFlags flags;
  double tol = 0.0;
  std::size_t max_iters = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--tol", tol, "Convergence tolerance override");
    sub->add_option("--max-iters", max_iters, "Iteration cap override");
    sub->add_option("--trace", flags.trace, "Trace CSV path override");
    sub->add_flag("--quiet", flags.quiet, "Suppress the summary on stdout");
  };

  std::vector<std::string> run_files;
  auto* run = app.add_subcommand("run", "Run one or more problem files");
  run->add_option("files", run_files, "Problem files")->required();
  add_common(run);

  std::string tmpl;
  std::uint64_t seed = 0;
  std::string out;
  Index dim = 5;
  double p = 0.0;
  auto* gen = app.add_subcommand("gen", "Generate a problem file with a planted common solution");
  gen->add_option("--template", tmpl, "two-ep, two-vi, fp-only, full-theorem1 or multi-q")->required();
  gen->add_option("--seed", seed, "Generator seed")->required();
  gen->add_option("--out", out, "Output path, stdout when omitted");
  gen->add_option("--dim", dim, "Dimension")->check(CLI::PositiveNumber);
  auto* p_opt = gen->add_option("--p", p, "l_p exponent; Hilbert when omitted")->check(CLI::Range(1.0, 1e6));

  std::string verify_file;
  auto* verify = app.add_subcommand("verify", "Load and validate a problem file without running it");
  verify->add_option("file", verify_file, "Problem file")->required();
  add_common(verify);

  std::string module = "all";
  std::uint64_t props_seed = 1;
  bool props_quiet = false;
  auto* props = app.add_subcommand("props", "Run the property suites");
  props->add_option("--module", module,
                    "space-geometry, convex-sets, operator-catalog, resolvent, hybrid-solver, harness-cli or all");
  props->add_option("--seed", props_seed, "Sampling seed");
  props->add_flag("--quiet", props_quiet, "Print failing suites only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  for (CLI::App* sub : {run, verify}) {
    if (sub->count("--tol") > 0) flags.tol = tol;
    if (sub->count("--max-iters") > 0) flags.max_iters = max_iters;
  }

  if (*run) return cmd_run(run_files, flags);
  if (*gen) return cmd_gen(tmpl, seed, out, dim, *p_opt ? std::optional<double>(p) : std::nullopt);
  if (*verify) return cmd_verify(verify_file, flags);
  if (*props) return cmd_props(module, props_seed, props_quiet);
  return kExitValidation;
}

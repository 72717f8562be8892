#ifndef HYBRID_PROBLEM_IO_HPP
#define HYBRID_PROBLEM_IO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "hybrid/hybrid_solver.hpp"

namespace hybrid {

enum class Runner {
  theorem1,
  theorem2,
  theorem4,
  corollary39,
  corollary40,
  corollary41,
  corollary42,
  corollary43,
  corollary44,
  baseline8,
  baseline9,
};

const char* to_string(Runner r);
std::optional<Runner> parse_runner(std::string_view name);

struct OutputPaths {
  std::string trace;
  std::string summary;
};

struct ExperimentSpec {
  ProblemInstance instance;
  Runner runner;
  SolverConfig config;
  OutputPaths outputs;
  //! Where the spec came from, for messages.
  std::string source;
};

//! A problem file that does not parse or violates a condition.  The message
//! is "<source>:<line>: <json path>: <reason>".
class LoadError : public ConfigError {
 public:
  LoadError(const std::string& source, std::size_t line, const std::string& path, const std::string& reason);

  std::size_t line() const { return line_; }
  const std::string& path() const { return path_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t line_;
  std::string path_;
  std::string reason_;
};

//! Parses and validates a problem file.  Instance defaults are filled in and
//! every instance condition is checked against the configured iteration cap.
ExperimentSpec parse_experiment(std::string_view text, const std::string& source = "<input>");
ExperimentSpec load_experiment(const std::filesystem::path& path);

//! Throws ConfigError when the runner cannot be used with the instance.
void check_runner(const ProblemInstance& instance, Runner runner);

}  // namespace hybrid

#endif  // HYBRID_PROBLEM_IO_HPP

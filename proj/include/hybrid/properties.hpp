#ifndef HYBRID_PROPERTIES_HPP
#define HYBRID_PROPERTIES_HPP

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "hybrid/operators.hpp"

namespace hybrid {

enum class PropertyModule { space_geometry, convex_sets, operator_catalog, resolvent, hybrid_solver, harness_cli };

const char* to_string(PropertyModule m);
std::optional<PropertyModule> parse_module(std::string_view name);
inline constexpr PropertyModule kAllModules[] = {
    PropertyModule::space_geometry, PropertyModule::convex_sets,   PropertyModule::operator_catalog,
    PropertyModule::resolvent,      PropertyModule::hybrid_solver, PropertyModule::harness_cli,
};

//! One sampled property.  For inequalities the margin is the slack; for
//! closeness checks it is minus the error, so a passing report always has
//! worst_margin >= -tolerance.
struct PropertyResult {
  std::string name;
  SampleReport report;
  double tolerance = 0.0;

  bool passed() const { return report.ok() && report.samples > 0; }
};

struct SuiteReport {
  PropertyModule module = PropertyModule::space_geometry;
  std::vector<PropertyResult> results;
  double seconds = 0.0;

  bool passed() const;
  const PropertyResult* find(std::string_view name) const;
};

//! Runs the property suite of one module.  Deterministic in `seed`.
SuiteReport run_property_suite(PropertyModule module, std::uint64_t seed = 1);

//! One line per property plus a verdict line.
void print_suite(std::ostream& out, const SuiteReport& suite);

}  // namespace hybrid

#endif  // HYBRID_PROPERTIES_HPP

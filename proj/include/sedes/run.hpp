#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "sedes/config.hpp"
#include "sedes/lyapunov.hpp"
#include "sedes/stability.hpp"

namespace sedes {

inline constexpr const char* kSchemeName =
    "IMEX Euler-Maruyama (implicit divergence operator, explicit drift and diffusion), exact-lag history";

struct RunOutcome {
    int exit_code = kExitPass;
    std::vector<ConditionReport> conditions;
    StabilityReport stability;
    /// Named pass/fail results that decide the exit code.
    std::map<std::string, bool> checks;
    nlohmann::json report;
    std::filesystem::path output_dir;
};

/// Runs the enabled analyses (conditions, decay solver, ensemble, statistics)
/// and writes config.resolved.json, ms_curve.csv, paths_sample.csv,
/// report.json and conditions.json into config.output_dir.
RunOutcome run(const RunConfig& config, std::ostream& log);

/// Formats a double with 17 significant digits.
std::string format_number(double v);

nlohmann::json to_json(const ConditionReport& r);
nlohmann::json to_json(const DecaySolution& d);
nlohmann::json to_json(const RateFit& f);
nlohmann::json to_json(const AsStats& s);
nlohmann::json to_json(const ExplosionTable& t);

/// Command-line entry point. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sedes

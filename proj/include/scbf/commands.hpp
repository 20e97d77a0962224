#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "scbf/config.hpp"
#include "scbf/experiment.hpp"
#include "scbf/theory.hpp"

namespace scbf {

inline constexpr int kSummarySchemaVersion = 1;

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitInfeasible = 2, kExitBlowUp = 3 };

nlohmann::json to_json(const ThresholdInputs& in);
nlohmann::json to_json(const ThresholdReport& r);
nlohmann::json to_json(const CheckResult& c);
nlohmann::json to_json(const RateFit& f);

/// Subcommands. Each writes its JSON result to `out` and returns an exit
/// code; exceptions propagate to run_command.
int cmd_check(const RunConfig& cfg, std::ostream& out);
int cmd_simulate_truth(const RunConfig& cfg, std::ostream& out);
int cmd_assimilate(const RunConfig& cfg, std::ostream& out);
int cmd_ensemble(const RunConfig& cfg, std::ostream& out);
int cmd_estimate_c0(const RunConfig& cfg, std::ostream& out);
int cmd_fit(const RunConfig& cfg, std::ostream& out);

/// Loads the config, dispatches, and maps errors to exit codes:
/// ConfigError/FitError/DomainError -> 1, NumericalError -> 3.
int run_command(const std::string& name, const std::string& config_path, std::ostream& out, std::ostream& err);

/// Reads column `column` (and t) of a CSV with "# " preamble lines.
void read_csv_columns(const std::string& path, const std::string& column, std::vector<double>& t,
                      std::vector<double>& v);

}  // namespace scbf

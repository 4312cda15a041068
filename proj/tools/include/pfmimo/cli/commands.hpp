#pragma once

#include "pfmimo/cli/scenario_io.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pfmimo::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitInput = 2,
  kExitInfeasible = 3,
  kExitNonConvergence = 4,
};

struct SimulateOptions {
  std::uint64_t slots = 1'000'000;
  std::uint64_t seed = 1;
  std::vector<double> tau;       ///< empty: solved
  std::vector<std::string> pi;   ///< "station=p1,p2,..."; missing stations are solved
};

struct SweepOptions {
  std::vector<double> snr_db;
  std::optional<int> draws;
  std::optional<std::uint64_t> seed;
  std::string station;  ///< required when the scenario has several stations
};

/// Writes the allocation as JSON to `json_out` and a text summary to `text_out`.
void cmd_solve(const Scenario& scenario, std::ostream& json_out, std::ostream& text_out);

/// CSV metric,analytic,empirical,ci99,within_ci. Returns the number of rows
/// outside their confidence interval.
int cmd_simulate(const Scenario& scenario, const SimulateOptions& opts, std::ostream& csv_out);

/// CSV snr_db,pattern_index,pi,sumlog_pf,sumlog_uniform, one row per SNR
/// point and pattern (1-based).
void cmd_sweep(const Scenario& scenario, const SweepOptions& opts, std::ostream& csv_out);

/// Parses "a,b,c"; throws ScenarioError naming `option` on bad or empty input.
std::vector<double> parse_number_list(const std::string& text, const std::string& option);

/// Full command line: `pfmimo solve|simulate|sweep <scenario.json> [options]`.
/// Diagnostics go to `err`; returns one of ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pfmimo::cli

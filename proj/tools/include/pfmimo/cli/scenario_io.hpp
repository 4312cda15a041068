#pragma once

// JSON scenario files.
//
//   {
//     "version": 1,
//     "mac": {"sigma_us": 9, "ts_us": 300},
//     "stations": [
//       {"id": "ap", "flows": ["f1", "f2"], "V": [[1, 0], [1, 1]],
//        "D": [[1500, 0], [1500, 1500]]}        // or per-flow [1500, 1500]
//     ],
//     "caps": {"f1": 2.5},                       // optional, bits/us
//     "solver": {"kkt_tol": 1e-6},               // optional overrides
//     "channel": {"ap_antennas": 8, "client_antennas": [4, 4]}  // optional
//   }
//
// D may be omitted, in which case every stream carries one bit. A flow whose
// V column is all zero is reported as infeasible rather than malformed.

#include <pfmimo/channel.hpp>
#include <pfmimo/error.hpp>
#include <pfmimo/solver.hpp>
#include <pfmimo/types.hpp>

#include <string>
#include <vector>

namespace pfmimo::cli {

inline constexpr int kScenarioVersion = 1;

/// Malformed scenario text. `where` is "line L, column C" for syntax errors
/// and a JSON path such as "stations[0].V[2]" for schema errors.
class ScenarioError : public ConfigurationError {
 public:
  ScenarioError(std::string where, const std::string& detail)
      : ConfigurationError(where + ": " + detail), where_(std::move(where)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

struct Scenario {
  MacParams mac{1.0, 1.0};
  std::vector<StationSpec> stations;
  LoadCaps caps;
  SolverConfig solver;
  ChannelConfig channel;
};

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Pretty-printed JSON with every field explicit; parse_scenario reads it
/// back to an identical Scenario.
std::string serialize_scenario(const Scenario& scenario);

bool same_scenario(const Scenario& a, const Scenario& b);

}  // namespace pfmimo::cli

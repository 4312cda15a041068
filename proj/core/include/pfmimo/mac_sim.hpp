#pragma once

// Slotted Monte Carlo simulation of the CSMA/CA MAC. In every slot each
// station transmits independently with probability tau_i. No transmitter is
// an idle slot of length sigma; exactly one is a success, and the station
// then draws a pattern k from pi_i and every flow f is credited v_kf d_kf
// bits; two or more collide. Busy slots (success or collision) last T_s.

#include "pfmimo/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pfmimo {

struct SimConfig {
  std::uint64_t slots = 1'000'000;
  std::uint64_t seed = 0;
  MacParams mac{1.0, 1.0};
};

/// Point estimate with the half-width of its approximate 99% confidence
/// interval (normal approximation, empirical variance).
struct Estimate {
  double value = 0.0;
  double ci99 = 0.0;
};

struct SimResult {
  std::uint64_t slots = 0;
  std::uint64_t idle_slots = 0;
  std::uint64_t success_slots = 0;
  std::uint64_t collision_slots = 0;
  double elapsed_us = 0.0;

  Estimate p_idle;
  std::vector<Estimate> p_success;    ///< per station
  std::vector<Estimate> p_collision;  ///< per station: 1 - P_succ,i - P_idle
  std::vector<Estimate> airtime;      ///< per station, fraction of elapsed time transmitting
  std::vector<std::string> flow_names;
  std::vector<Estimate> flow_throughput;  ///< bits/us, global flow order
  std::vector<std::vector<std::uint64_t>> pattern_counts;  ///< per station, per pattern
  std::vector<std::string> warnings;
};

/// Deterministic for a given seed. Each station draws from its own
/// mt19937_64 substreams keyed on the seed and a hash of the station id.
SimResult simulate(std::span<const StationSpec> stations, const AttemptRates& rates,
                   std::span<const PatternDistribution> distributions, const SimConfig& cfg);

struct ComparisonRow {
  std::string metric;
  double analytic = 0.0;
  double empirical = 0.0;
  double ci99 = 0.0;
  bool within_ci = false;
};

/// Lines up every simulated statistic with its analytic value.
std::vector<ComparisonRow> compare_with_model(std::span<const StationSpec> stations,
                                              const AttemptRates& rates,
                                              std::span<const PatternDistribution> distributions,
                                              const MacParams& mac, const SimResult& result);

}  // namespace pfmimo

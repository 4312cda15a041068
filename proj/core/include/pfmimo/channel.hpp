#pragma once

// SNR-dependent payload matrices for an AP transmitting MU-MIMO patterns to
// one client per flow.
//
// PHY abstraction: each fading realization draws an independent complex
// Gaussian channel (unit variance per antenna pair). For pattern k the AP
// stacks the first v_kf receive antennas of every client f and applies
// zero-forcing precoding with the total power split equally over the S_k
// streams, so stream j sees
//
//   SNR_j = snr / (S_k [(H H^H)^{-1}]_jj).
//
// A stream delivers `bits_per_stream` when SNR_j reaches the demodulation
// threshold of the fixed MCS, nothing otherwise; d_kf is the average over
// the flow's streams and the realizations.

#include "pfmimo/solver.hpp"
#include "pfmimo/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pfmimo {

enum class FadingModel {
  kRayleigh,
  kNone,  ///< deterministic unit channel: SNR_j = snr / S_k
};

struct ChannelConfig {
  /// 802.11ac MCS 0 (BPSK 1/2), 20 MHz, 800 ns guard interval, per stream.
  static constexpr double kMcs0RateMbps = 6.5;

  int ap_antennas = 8;
  /// Receive antennas of the client of each flow; empty means "just enough
  /// for the largest stream count the flow gets in any pattern".
  std::vector<int> client_antennas;
  double snr_db = 30.0;
  double txop_us = 1000.0;
  double bits_per_stream = kMcs0RateMbps * 1000.0;
  double demod_threshold_db = 2.0;
  int draws = 10000;
  std::uint64_t seed = 1;
  FadingModel fading = FadingModel::kRayleigh;

  void validate() const;
};

/// Post-precoding stream gains g = SNR_j / snr for every (pattern, flow),
/// pooled over streams and realizations and kept sorted, so payloads at any
/// SNR follow by counting.
class StreamGainTable {
 public:
  static StreamGainTable sample(const PatternMatrix& patterns, const ChannelConfig& ch);

  /// d_kf at the given mean SNR (dB); +/-inf are accepted.
  PayloadMatrix payloads(double snr_db, double bits_per_stream, double demod_threshold_db) const;

  int patterns() const noexcept { return patterns_; }
  int flows() const noexcept { return flows_; }

 private:
  int patterns_ = 0;
  int flows_ = 0;
  std::vector<std::vector<double>> gains_;  // [k * flows + f], ascending
};

/// Throws CapabilityError when a pattern needs more streams than the AP has
/// transmit antennas, or a client more than it has receive antennas.
PayloadMatrix build_payload_matrix(const PatternMatrix& patterns, const ChannelConfig& ch);

struct SweepPoint {
  double snr_db = 0.0;
  bool feasible = true;
  std::vector<std::string> infeasible_flows;
  PatternDistribution pf = PatternDistribution::uniform(1);
  double sumlog_pf = 0.0;       ///< sum_f log rate_f, rates in bits/us at AP airtime 1
  double sumlog_uniform = 0.0;  ///< same under pi = 1/K
  PayloadMatrix payloads{Matrix::Zero(1, 1)};
};

struct SweepResult {
  std::vector<SweepPoint> points;
};

/// Solves the proportional-fair pattern distribution at every SNR point and
/// compares it with the uniform scheduler. Points where some flow gets no
/// bits under every pattern are flagged infeasible (sum-logs = -inf).
SweepResult snr_sweep(const PatternMatrix& patterns, std::span<const double> snr_points,
                      const ChannelConfig& ch, const SolverConfig& cfg);

/// Sum of log flow rates (bits/us) of a single saturated station.
double sum_log_rate(const PatternMatrix& patterns, const PayloadMatrix& payloads,
                    const PatternDistribution& pi, double txop_us);

}  // namespace pfmimo

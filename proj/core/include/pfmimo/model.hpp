#pragma once

// Analytic throughput and airtime of a slotted CSMA/CA WLAN in which every
// station attempts with a fixed probability per slot (CW_min = CW_max), with
// the MU-MIMO extension where a successful transmission carries one of the
// station's spatial-stream patterns.

#include "pfmimo/types.hpp"

#include <vector>

namespace pfmimo {

/// X(x) = a + prod_k (1 + x_k) - 1. Infinite odds give X = +inf.
double big_x(const Vector& x, double a);

struct SlotProbabilities {
  double idle = 0.0;
  Vector success;    ///< P_succ,i: only station i transmits
  Vector collision;  ///< P_coll,i = 1 - P_succ,i - P_idle
};

SlotProbabilities slot_probabilities(const AttemptRates& rates);

/// Fraction of time carrying a successful transmission of station i,
/// x_i / X(x). Evaluated in the tau domain so tau_i = 1 is exact.
double success_airtime(const AttemptRates& rates, std::size_t i, double a);

/// Station throughput in bits/us for a per-transmission payload of `bits`.
double station_throughput(const AttemptRates& rates, std::size_t i, double bits,
                          const MacParams& mac);

/// Same quantity written as P_succ D / (sigma P_idle + T_s (1 - P_idle)).
double station_throughput_slot_form(const AttemptRates& rates, std::size_t i, double bits,
                                    const MacParams& mac);

/// Total airtime of station i (successes plus collisions):
/// x_i / X * (1 + P_coll / (1 - P_coll)).
///
/// Throws DegenerateSaturationError when two or more stations are saturated
/// (tau = 1), because P_coll,i = 1 then leaves the ratio undefined.
double station_airtime(const AttemptRates& rates, std::size_t i, double a);

/// Closed form tau_i / (X * P_idle) of the same airtime.
double station_airtime_closed_form(const AttemptRates& rates, std::size_t i, double a);

/// Per-flow throughput s(f) in bits/us, in the station's flow order:
/// (x_i / X) / T_s * sum_k pi_k v_kf d_kf.
Vector flow_throughput(const AttemptRates& rates, std::size_t station_index,
                       const StationSpec& station, const PatternDistribution& pi,
                       const MacParams& mac);

/// Average number of spatial streams per transmission, sum_k pi_k v_kf.
Vector average_streams(const PatternMatrix& patterns, const PatternDistribution& pi);

struct FlowAirtimeMetrics {
  /// T_i * average streams: airtime a single-stream link would need.
  Vector equivalent_single_stream;
  /// Share of the station's spatial streams used by the flow.
  Vector stream_fraction;
  /// Fraction of the station's transmissions in which the flow is scheduled.
  Vector txop_fraction;
};

FlowAirtimeMetrics flow_airtime_metrics(const StationSpec& station, const PatternDistribution& pi,
                                        double station_airtime);

}  // namespace pfmimo

#include "pfmimo/model.hpp"

#include "pfmimo/error.hpp"

#include <cmath>
#include <limits>

namespace pfmimo {

namespace {

void check_index(const AttemptRates& rates, std::size_t i) {
  if (i >= rates.size()) throw DomainError("station index out of range");
}

double idle_probability(const Vector& tau) { return (1.0 - tau.array()).prod(); }

double others_silent(const Vector& tau, std::size_t i) {
  double p = 1.0;
  for (Eigen::Index k = 0; k < tau.size(); ++k) {
    if (static_cast<std::size_t>(k) != i) p *= 1.0 - tau(k);
  }
  return p;
}

// X * P_idle = a P_idle + 1 - P_idle; finite and >= a for every tau.
double normalized_slot_length(const Vector& tau, double a) {
  const double idle = idle_probability(tau);
  return a * idle + 1.0 - idle;
}

int saturated_count(const Vector& tau) { return static_cast<int>((tau.array() == 1.0).count()); }

}  // namespace

double big_x(const Vector& x, double a) {
  if (!(a > 0.0 && a <= 1.0)) throw DomainError("ratio a must lie in (0, 1]");
  double product = 1.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (!(x(k) >= 0.0)) throw DomainError("odds x must be non-negative");
    product *= 1.0 + x(k);
  }
  if (std::isinf(product)) return std::numeric_limits<double>::infinity();
  return (product - 1.0) + a;
}

SlotProbabilities slot_probabilities(const AttemptRates& rates) {
  const Vector& tau = rates.tau();
  SlotProbabilities p;
  p.idle = idle_probability(tau);
  p.success.resize(tau.size());
  p.collision.resize(tau.size());
  for (Eigen::Index i = 0; i < tau.size(); ++i) {
    p.success(i) = tau(i) * others_silent(tau, static_cast<std::size_t>(i));
    p.collision(i) = 1.0 - p.success(i) - p.idle;
  }
  return p;
}

double success_airtime(const AttemptRates& rates, std::size_t i, double a) {
  check_index(rates, i);
  const Vector& tau = rates.tau();
  return tau(i) * others_silent(tau, i) / normalized_slot_length(tau, a);
}

double station_throughput(const AttemptRates& rates, std::size_t i, double bits,
                          const MacParams& mac) {
  if (!(bits >= 0.0)) throw DomainError("payload must be non-negative");
  return success_airtime(rates, i, mac.a()) * bits / mac.t_s();
}

double station_throughput_slot_form(const AttemptRates& rates, std::size_t i, double bits,
                                    const MacParams& mac) {
  check_index(rates, i);
  const auto p = slot_probabilities(rates);
  return p.success(static_cast<Eigen::Index>(i)) * bits /
         (mac.sigma() * p.idle + mac.t_s() * (1.0 - p.idle));
}

double station_airtime(const AttemptRates& rates, std::size_t i, double a) {
  check_index(rates, i);
  if (saturated_count(rates.tau()) >= 2) {
    throw DegenerateSaturationError("two or more stations attempt in every slot");
  }
  const auto p = slot_probabilities(rates);
  const double coll = p.collision(static_cast<Eigen::Index>(i));
  // 1 - P_coll,i = P_idle + P_succ,i, which is positive unless another
  // station is saturated and i is silent; then i has no airtime at all.
  const double not_coll = p.idle + p.success(static_cast<Eigen::Index>(i));
  if (not_coll == 0.0) return 0.0;
  return success_airtime(rates, i, a) * (1.0 + coll / not_coll);
}

double station_airtime_closed_form(const AttemptRates& rates, std::size_t i, double a) {
  check_index(rates, i);
  return rates.tau()(static_cast<Eigen::Index>(i)) / normalized_slot_length(rates.tau(), a);
}

Vector average_streams(const PatternMatrix& patterns, const PatternDistribution& pi) {
  if (pi.size() != patterns.patterns()) throw DomainError("distribution length != pattern count");
  return patterns.as_real().transpose() * pi.pi();
}

Vector flow_throughput(const AttemptRates& rates, std::size_t station_index,
                       const StationSpec& station, const PatternDistribution& pi,
                       const MacParams& mac) {
  if (pi.size() != station.pattern_count()) {
    throw DomainError("distribution length != pattern count of station '" + station.id + "'");
  }
  const double share = success_airtime(rates, station_index, mac.a());
  return share / mac.t_s() * (station.gains().transpose() * pi.pi());
}

FlowAirtimeMetrics flow_airtime_metrics(const StationSpec& station, const PatternDistribution& pi,
                                        double station_airtime) {
  const Vector streams = average_streams(station.patterns, pi);
  FlowAirtimeMetrics m;
  m.equivalent_single_stream = station_airtime * streams;
  m.stream_fraction = streams / streams.sum();
  m.txop_fraction = Vector::Zero(station.flow_count());
  for (int f = 0; f < station.flow_count(); ++f) {
    for (int k = 0; k < station.pattern_count(); ++k) {
      if (station.patterns(k, f) > 0) m.txop_fraction(f) += pi[k];
    }
  }
  return m;
}

}  // namespace pfmimo

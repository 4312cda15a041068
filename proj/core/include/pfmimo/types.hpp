#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace pfmimo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IntMatrix = Eigen::MatrixXi;

/// Slot timing of the CSMA/CA MAC. Durations are in microseconds.
class MacParams {
 public:
  MacParams(double sigma_us, double t_s_us);

  /// Builds parameters with the given idle/busy ratio a = sigma / T_s.
  static MacParams from_ratio(double a, double t_s_us = 1.0);

  double sigma() const noexcept { return sigma_; }
  double t_s() const noexcept { return t_s_; }
  double a() const noexcept { return a_; }

 private:
  double sigma_;
  double t_s_;
  double a_;
};

/// Per-station attempt probabilities tau and their odds x = tau / (1 - tau).
///
/// tau = 1 is represented exactly; the matching x entry is +infinity.
class AttemptRates {
 public:
  explicit AttemptRates(Vector tau);

  static AttemptRates from_odds(const Vector& x);

  const Vector& tau() const noexcept { return tau_; }
  const Vector& x() const noexcept { return x_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(tau_.size()); }

 private:
  Vector tau_;
  Vector x_;
};

/// Spatial-stream counts v_kf: row k is a transmission pattern, column f a flow.
class PatternMatrix {
 public:
  explicit PatternMatrix(IntMatrix entries);
  PatternMatrix(std::initializer_list<std::initializer_list<int>> rows);

  static PatternMatrix identity(int flows);

  int patterns() const noexcept { return static_cast<int>(entries_.rows()); }
  int flows() const noexcept { return static_cast<int>(entries_.cols()); }
  int operator()(int k, int f) const { return entries_(k, f); }
  const IntMatrix& entries() const noexcept { return entries_; }
  Matrix as_real() const { return entries_.cast<double>(); }

  /// Total number of spatial streams used by pattern k.
  int streams(int k) const { return entries_.row(k).sum(); }

  friend bool operator==(const PatternMatrix& lhs, const PatternMatrix& rhs) {
    return lhs.entries_ == rhs.entries_;
  }

 private:
  IntMatrix entries_;
};

/// Average bits d_kf delivered by one spatial stream of flow f under pattern k.
class PayloadMatrix {
 public:
  explicit PayloadMatrix(Matrix entries);

  /// Broadcasts a per-flow payload D_f down every row.
  static PayloadMatrix per_flow(int patterns, std::span<const double> bits_per_flow);
  static PayloadMatrix uniform(int patterns, int flows, double bits);

  int patterns() const noexcept { return static_cast<int>(entries_.rows()); }
  int flows() const noexcept { return static_cast<int>(entries_.cols()); }
  double operator()(int k, int f) const { return entries_(k, f); }
  const Matrix& entries() const noexcept { return entries_; }

  friend bool operator==(const PayloadMatrix& lhs, const PayloadMatrix& rhs) {
    return lhs.entries_ == rhs.entries_;
  }

 private:
  Matrix entries_;
};

struct StationSpec {
  StationSpec(std::string id, std::vector<std::string> flows, PatternMatrix patterns,
              PayloadMatrix payloads);

  /// Same payload on every pattern for each flow.
  StationSpec(std::string id, std::vector<std::string> flows, PatternMatrix patterns,
              double bits_per_stream);

  std::string id;
  std::vector<std::string> flows;
  PatternMatrix patterns;
  PayloadMatrix payloads;

  int flow_count() const noexcept { return static_cast<int>(flows.size()); }
  int pattern_count() const noexcept { return patterns.patterns(); }

  /// Bits per transmission credited to flow f by pattern k: v_kf * d_kf.
  Matrix gains() const;
};

/// Throws ConfigurationError when the stations do not form a valid WLAN
/// (no stations, or a flow identifier used twice).
void validate_scenario(std::span<const StationSpec> stations);

/// Fractions of transmission opportunities pi_k assigned to each pattern.
class PatternDistribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit PatternDistribution(Vector pi);

  static PatternDistribution uniform(int patterns);
  static PatternDistribution point_mass(int patterns, int k);

  const Vector& pi() const noexcept { return pi_; }
  int size() const noexcept { return static_cast<int>(pi_.size()); }
  double operator[](int k) const { return pi_(k); }

 private:
  Vector pi_;
};

/// Multipliers of the proportional-fair program.
struct Multipliers {
  std::map<std::string, double> lambda;  ///< per flow
  std::vector<double> nu;                ///< per station
  std::vector<Vector> theta;             ///< per station, per pattern
};

struct KktResiduals {
  double stationarity = 0.0;
  double complementary_slackness = 0.0;
  double dual_feasibility = 0.0;
};

/// Full solution of a scenario.
struct Allocation {
  AttemptRates attempt{Vector()};
  std::vector<PatternDistribution> distributions;
  std::map<std::string, double> flow_rates;        ///< bits/us, delivered
  std::map<std::string, double> flow_capacity;     ///< bits/us, before load caps
  std::vector<double> station_airtimes;            ///< in station order
  Multipliers multipliers;
  std::vector<KktResiduals> kkt;                   ///< per station
  double objective = 0.0;                          ///< sum_f log s(f)
};

}  // namespace pfmimo

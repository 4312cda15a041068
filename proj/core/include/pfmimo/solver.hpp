#pragma once

// Proportional-fair allocation of MU-MIMO transmission patterns and station
// attempt rates.
//
// The program maximizes sum_f log s(f) over the log-odds x~ = log x and the
// per-station pattern distributions pi_i. Writing A_i = V_i .* D_i, the
// objective separates as
//
//   sum_i |F_i| x~_i - |F| log X(e^x~) + sum_i sum_{f in F_i} log (A_i' pi_i)_f + const,
//
// so at the optimum each station's airtime is |F_i| / |F| (which fixes the
// attempt rates) and each pi_i maximizes its own sum of log stream rates on
// the simplex. With finite offered loads the per-flow log rates are capped;
// the solver then works on the load multipliers lambda_f in [0, 1], for
// which the same separation holds with |F_i| replaced by sum_{F_i} lambda_f.

#include "pfmimo/types.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace pfmimo {

struct SolverConfig {
  double objective_tol = 1e-10;    ///< relative objective improvement threshold
  double simplex_tol = 1e-9;       ///< feasibility / support threshold for pi
  int max_iters = 100000;
  double subgradient_step = 1e-2;  ///< multiplier step alpha of the dual method
  double root_tol = 1e-12;         ///< bisection tolerance for attempt rates
  double kkt_tol = 1e-6;

  /// Throws ConfigurationError on non-positive tolerances or max_iters < 1.
  void validate() const;
};

struct KktReport {
  double nu = 0.0;
  Vector theta;
  /// max_l |sum_f lambda_f A_lf / (A' pi)_f - nu + theta_l|
  double stationarity_residual = 0.0;
  /// max_l |theta_l pi_l|
  double complementary_slackness = 0.0;
  /// max(0, -min_l theta_l)
  double dual_feasibility_violation = 0.0;

  bool satisfied(double tol) const {
    return stationarity_residual <= tol && complementary_slackness <= tol &&
           dual_feasibility_violation <= tol;
  }
};

/// Maximum offered load per flow, bits/us.
struct LoadCaps {
  std::map<std::string, double> caps;

  bool empty() const noexcept { return caps.empty(); }
  void validate(std::span<const StationSpec> stations) const;
};

// --- attempt rates -----------------------------------------------------------

/// Airtime share T_i = |F_i| / |F| of every station.
Vector airtime_targets(std::span<const int> flow_counts);

/// Airtime shares proportional to arbitrary positive station weights.
Vector airtime_shares(const Vector& station_weights);

/// Attempt probabilities whose station airtimes equal `targets`.
///
/// With c = X * P_idle the airtime identity T_i = tau_i / (X P_idle) gives
/// tau_i = t_i c, and c solves c = 1 - (1 - a) prod_i (1 - t_i c) on (0, 1];
/// the root is bracketed by g(0) = a > 0, g(1) <= 0 and found by bisection.
AttemptRates solve_attempt_rates(const Vector& targets, double a, const SolverConfig& cfg);

// --- per-station pattern subproblem -------------------------------------------

/// sum_f w_f log (A' pi)_f; -inf when some weighted flow gets no rate.
double pattern_objective(const Matrix& gains, const Vector& weights, const Vector& pi);

/// Gradient of pattern_objective with respect to pi.
Vector pattern_gradient(const Matrix& gains, const Vector& weights, const Vector& pi);

/// Throws InfeasibleFlowError if some flow has no pattern with v * d > 0.
void check_schedulable(const StationSpec& station);

/// Maximizes sum_f log(sum_k pi_k v_kf d_kf) over the simplex by projected
/// gradient ascent with backtracking, starting from the uniform distribution.
PatternDistribution solve_pattern_distribution(const StationSpec& station, const SolverConfig& cfg);

/// Weighted variant: maximizes sum_f w_f log(...), all w_f > 0.
PatternDistribution solve_pattern_distribution(const StationSpec& station, const Vector& weights,
                                               const SolverConfig& cfg);

struct DualSolution {
  double nu = 0.0;
  Vector theta;
  PatternDistribution distribution = PatternDistribution::uniform(1);
  int iterations = 0;
};

/// Multiplier method on (nu, theta):
///   nu    <- nu - alpha (1 - sum_k pi_k)
///   theta <- [theta - alpha pi]_+
/// with pi recovered each iterate from the (augmented) stationarity system
///   sum_f A_lf / (A' pi)_f = nu_eff - theta_eff,l.
/// Throws ConvergenceError if max_iters is reached.
DualSolution dual_subgradient(const StationSpec& station, const SolverConfig& cfg);

struct RecoveredDistribution {
  PatternDistribution distribution = PatternDistribution::uniform(1);
  bool unique = false;
};

/// Rebuilds pi from multipliers: solves X mu = (nu 1 - theta)_X on a
/// full-rank block of rows X by Gaussian elimination, sets the per-flow
/// stream rate target t = 1 / mu, then solves V' pi = t, sum pi = 1, pi >= 0
/// with pi_l = 0 wherever theta_l > 0. When the solution set is not a single
/// point the minimum-norm non-negative element is returned.
///
/// Throws UnsupportedStructureError if V lacks full column rank and
/// InconsistentMultipliersError if no valid distribution matches.
RecoveredDistribution recover_pi(const PatternMatrix& patterns, double nu, const Vector& theta,
                                 const SolverConfig& cfg);

/// Same, for a station with pattern-dependent payloads (uses A = V .* D).
RecoveredDistribution recover_pi(const StationSpec& station, double nu, const Vector& theta,
                                 const SolverConfig& cfg);

/// Estimates nu as the largest stationarity left-hand side
/// L_l = sum_f lambda_f A_lf / (A' pi)_f, sets theta_l = 0 on the support of
/// pi (pi_l > support_tol) and theta_l = nu - L_l elsewhere, then reports the
/// residuals. With lambda = 1 the optimum has nu = |F_i|.
KktReport kkt_report(const StationSpec& station, const PatternDistribution& pi, const Vector& lambda,
                     double support_tol = 1e-9);

/// Residuals of caller-supplied multipliers.
KktReport kkt_report(const StationSpec& station, const PatternDistribution& pi, const Vector& lambda,
                     double nu, const Vector& theta);

// --- whole scenario -------------------------------------------------------------

/// Proportional-fair allocation of a WLAN. Without binding load caps the
/// problem is solved through the separation above; with caps the convex
/// dual over the load multipliers lambda in [0, 1] is minimized by projected
/// gradient, each evaluation reusing the separated solve with weights lambda.
Allocation solve_scenario(std::span<const StationSpec> stations, const MacParams& mac,
                          const LoadCaps& caps, const SolverConfig& cfg);

struct JointSolution {
  AttemptRates attempt{Vector()};
  std::vector<PatternDistribution> distributions;
  double objective = 0.0;
  int iterations = 0;
};

/// Reference solver: projected gradient ascent directly on
/// sum_f min(log s_f(x~, pi), log cap_f) over the box
/// tau in [1e-6, 1 - 1e-9] and the product of simplices. The min is smoothed
/// with a soft-min whose temperature is driven to zero.
JointSolution solve_joint(std::span<const StationSpec> stations, const MacParams& mac,
                          const LoadCaps& caps, const SolverConfig& cfg);

// --- convexity ----------------------------------------------------------------

/// Midpoint test of the convexity of
///   g_f(x~, pi) = -x~_0 - log(sum_k pi_k v_kf d_kf) + log X(e^x~)
/// for station 0 of an n-station WLAN. Returns the largest
/// g(mid) - (g(p) + g(q)) / 2 over `trials` random segments and flows.
double check_log_convexity(const StationSpec& station, int n_stations, double a, int trials,
                           std::uint64_t seed);

}  // namespace pfmimo

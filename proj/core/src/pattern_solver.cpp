#include "pfmimo/error.hpp"
#include "pfmimo/simplex.hpp"
#include "pfmimo/solver.hpp"

#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace pfmimo {

void SolverConfig::validate() const {
  if (!(objective_tol > 0.0) || !(simplex_tol > 0.0) || !(subgradient_step > 0.0) ||
      !(root_tol > 0.0) || !(kkt_tol > 0.0)) {
    throw ConfigurationError("solver tolerances and step size must be positive");
  }
  if (max_iters < 1) throw ConfigurationError("max_iters must be at least 1");
}

void LoadCaps::validate(std::span<const StationSpec> stations) const {
  for (const auto& [flow, cap] : caps) {
    if (!(cap > 0.0)) throw ConfigurationError("load cap of flow '" + flow + "' must be positive");
    bool found = false;
    for (const auto& s : stations) {
      for (const auto& f : s.flows) found = found || f == flow;
    }
    if (!found) throw ConfigurationError("load cap names unknown flow '" + flow + "'");
  }
}

Vector airtime_targets(std::span<const int> flow_counts) {
  if (flow_counts.empty()) throw ConfigurationError("WLAN has no stations");
  Vector weights(static_cast<Eigen::Index>(flow_counts.size()));
  for (std::size_t i = 0; i < flow_counts.size(); ++i) {
    if (flow_counts[i] < 1) {
      throw ConfigurationError("station " + std::to_string(i) + " carries no flows");
    }
    weights(static_cast<Eigen::Index>(i)) = flow_counts[i];
  }
  return airtime_shares(weights);
}

Vector airtime_shares(const Vector& station_weights) {
  if (station_weights.size() == 0) throw ConfigurationError("WLAN has no stations");
  if ((station_weights.array() <= 0.0).any()) {
    throw ConfigurationError("station weights must be positive");
  }
  Vector t = station_weights / station_weights.sum();
  // push the rounding residue onto the largest share until the sum taken in
  // station order is exactly 1
  Eigen::Index big = 0;
  t.maxCoeff(&big);
  for (int pass = 0; pass < 8; ++pass) {
    const double total = std::accumulate(t.begin(), t.end(), 0.0);
    if (total == 1.0) break;
    t(big) += 1.0 - total;
  }
  return t;
}

AttemptRates solve_attempt_rates(const Vector& targets, double a, const SolverConfig& cfg) {
  if (targets.size() == 0) throw ConfigurationError("no airtime targets");
  if ((targets.array() <= 0.0).any() || (targets.array() > 1.0).any()) {
    throw DomainError("airtime targets must lie in (0, 1]");
  }
  if (std::abs(targets.sum() - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "airtime targets sum to " << targets.sum() << ", expected 1";
    throw DomainError(msg.str());
  }
  if (!(a > 0.0 && a <= 1.0)) throw DomainError("ratio a must lie in (0, 1]");

  auto g = [&](double c) {
    return 1.0 - (1.0 - a) * (1.0 - c * targets.array()).prod() - c;
  };

  double lo = 0.0;
  double hi = 1.0;
  if (g(hi) >= 0.0) {
    lo = hi;  // root at the boundary (single station or a = 1)
  } else {
    while (hi - lo > cfg.root_tol) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) > 0.0 ? lo : hi) = mid;
    }
  }
  const double c = lo == 1.0 ? 1.0 : 0.5 * (lo + hi);
  Vector tau = (c * targets).cwiseMin(1.0);
  return AttemptRates(std::move(tau));
}

double pattern_objective(const Matrix& gains, const Vector& weights, const Vector& pi) {
  const Vector y = gains.transpose() * pi;
  double total = 0.0;
  for (Eigen::Index f = 0; f < y.size(); ++f) {
    if (weights(f) == 0.0) continue;
    if (!(y(f) > 0.0)) return -std::numeric_limits<double>::infinity();
    total += weights(f) * std::log(y(f));
  }
  return total;
}

Vector pattern_gradient(const Matrix& gains, const Vector& weights, const Vector& pi) {
  const Vector y = gains.transpose() * pi;
  return gains * weights.cwiseQuotient(y);
}

void check_schedulable(const StationSpec& station) {
  const Matrix gains = station.gains();
  for (int f = 0; f < station.flow_count(); ++f) {
    if (!(gains.col(f).maxCoeff() > 0.0)) {
      throw InfeasibleFlowError(station.flows[static_cast<std::size_t>(f)],
                                "no pattern on station '" + station.id +
                                    "' delivers bits to it");
    }
  }
}

namespace {

// Active-set Newton refinement of a projected-gradient solution. On the
// support S (plus any pattern whose gradient exceeds nu = sum w, the value
// the gradient takes on the support at the optimum) it solves
//
//   [ -H_SS  1 ] [ d ]   [ g_S ]
//   [  1'    0 ] [ m ] = [  0  ]
//
// and moves along d as far as the simplex allows. Flat directions, which
// first-order steps resolve only to O(mapping / curvature), are settled here.
Vector newton_polish(const Matrix& gains, const Vector& weights, Vector pi) {
  const Eigen::Index k = pi.size();
  const double nu = weights.sum();
  double value = pattern_objective(gains, weights, pi);
  for (int iter = 0; iter < 50; ++iter) {
    const Vector y = gains.transpose() * pi;
    const Vector grad = gains * weights.cwiseQuotient(y);
    std::vector<Eigen::Index> active;
    for (Eigen::Index l = 0; l < k; ++l) {
      if (pi(l) > 0.0 || grad(l) > nu * (1.0 + 1e-12)) active.push_back(l);
    }
    const auto s = static_cast<Eigen::Index>(active.size());
    const Matrix a_s = gains(active, Eigen::all);
    const Vector curvature = weights.cwiseQuotient(y.cwiseAbs2());
    Matrix kkt = Matrix::Zero(s + 1, s + 1);
    kkt.topLeftCorner(s, s) = a_s * curvature.asDiagonal() * a_s.transpose();
    kkt.col(s).head(s).setOnes();
    kkt.row(s).head(s).setOnes();
    Vector rhs = Vector::Zero(s + 1);
    rhs.head(s) = grad(active);
    const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    Vector d = Vector::Zero(k);
    d(active) = sol.head(s);
    if (!(d.lpNorm<Eigen::Infinity>() > 1e-15)) break;

    double t = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index l = 0; l < k; ++l) {
      if (d(l) < 0.0 && pi(l) + t * d(l) < 0.0) {
        t = pi(l) / -d(l);
        blocking = l;
      }
    }
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      Vector trial = pi + t * d;
      if (blocking >= 0 && t == pi(blocking) / -d(blocking)) trial(blocking) = 0.0;
      trial = trial.cwiseMax(0.0);
      trial /= trial.sum();
      const double trial_value = pattern_objective(gains, weights, trial);
      if (trial_value >= value - 1e-15 * std::max(1.0, std::abs(value))) {
        moved = trial_value > value || (trial - pi).lpNorm<Eigen::Infinity>() > 0.0;
        pi = std::move(trial);
        value = std::max(value, trial_value);
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  return pi;
}

}  // namespace

PatternDistribution solve_pattern_distribution(const StationSpec& station, const SolverConfig& cfg) {
  return solve_pattern_distribution(station, Vector::Ones(station.flow_count()), cfg);
}

PatternDistribution solve_pattern_distribution(const StationSpec& station, const Vector& weights,
                                               const SolverConfig& cfg) {
  cfg.validate();
  check_schedulable(station);
  if (weights.size() != station.flow_count() || (weights.array() <= 0.0).any()) {
    throw DomainError("flow weights must be positive, one per flow");
  }
  const int k_count = station.pattern_count();
  if (k_count == 1) return PatternDistribution::point_mass(1, 0);

  // The argmax is invariant to per-flow scaling of the gains; normalizing
  // each column to unit maximum keeps the step size O(1).
  Matrix gains = station.gains();
  for (Eigen::Index f = 0; f < gains.cols(); ++f) gains.col(f) /= gains.col(f).maxCoeff();

  Vector pi = Vector::Constant(k_count, 1.0 / k_count);
  double value = pattern_objective(gains, weights, pi);
  double step = 1.0;
  double mapping_norm = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const Vector grad = pattern_gradient(gains, weights, pi);
    Vector next;
    Vector delta;
    double next_value = 0.0;
    for (;;) {
      next = project_onto_simplex(pi + step * grad);
      next_value = pattern_objective(gains, weights, next);
      delta = next - pi;
      if (next_value >= value + grad.dot(delta) - delta.squaredNorm() / (2.0 * step)) break;
      step *= 0.5;
      if (step < 1e-300) break;
    }
    mapping_norm = delta.norm() / step;
    const double gain = next_value - value;
    pi = std::move(next);
    value = next_value;
    if (mapping_norm < 1e-10 ||
        (gain <= cfg.objective_tol * std::max(1.0, std::abs(value)) && mapping_norm < 1e-7)) {
      const Vector polished = newton_polish(gains, weights, pi);
      if (pattern_objective(gains, weights, polished) >= value) pi = polished;
      return PatternDistribution(pi / pi.sum());
    }
    step *= 2.0;
  }
  throw ConvergenceError("projected gradient did not converge for station '" + station.id + "'",
                         mapping_norm);
}

}  // namespace pfmimo

#include "pfmimo/error.hpp"
#include "pfmimo/solver.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pfmimo {

namespace {

// Inner step of the multiplier method. For fixed (nu, theta) and step rho,
// minimizes over pi (free sign, A' pi > 0)
//
//   -sum_f log (A' pi)_f + nu h + rho/2 h^2
//     + 1/(2 rho) sum_l ([theta_l - rho pi_l]_+^2 - theta_l^2)
//     + rho/2 |pi - anchor|^2,                         h = sum pi - 1,
//
// whose stationarity condition is sum_f A_lf / (A' pi)_f = nu' - theta'_l with
// the updated multipliers nu' = nu + rho h and theta' = [theta - rho pi]_+ (up
// to the proximal term, which vanishes at a fixed point).
class AugmentedStep {
 public:
  AugmentedStep(const Matrix& gains, double rho) : gains_(gains), rho_(rho) {}

  double value(const Vector& pi, double nu, const Vector& theta, const Vector& anchor) const {
    const Vector y = gains_.transpose() * pi;
    if ((y.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
    const double h = pi.sum() - 1.0;
    const Vector shifted = (theta - rho_ * pi).cwiseMax(0.0);
    return -y.array().log().sum() + nu * h + 0.5 * rho_ * h * h +
           (shifted.squaredNorm() - theta.squaredNorm()) / (2.0 * rho_) +
           0.5 * rho_ * (pi - anchor).squaredNorm();
  }

  Vector minimize(Vector pi, double nu, const Vector& theta, const Vector& anchor) const {
    const Eigen::Index k = pi.size();
    for (int iter = 0; iter < 50; ++iter) {
      const Vector y = gains_.transpose() * pi;
      const double h = pi.sum() - 1.0;
      const Vector shifted = theta - rho_ * pi;
      Vector grad = -gains_ * y.cwiseInverse();
      grad.array() += nu + rho_ * h;
      grad -= shifted.cwiseMax(0.0);
      grad += rho_ * (pi - anchor);

      Matrix hess = gains_ * y.array().square().inverse().matrix().asDiagonal() * gains_.transpose();
      hess.array() += rho_;
      for (Eigen::Index l = 0; l < k; ++l) {
        hess(l, l) += rho_ + (shifted(l) > 0.0 ? rho_ : 0.0);
      }
      const Vector dir = -hess.ldlt().solve(grad);
      const double slope = grad.dot(dir);
      if (!(slope < -1e-24)) break;
      // Close to the minimizer the objective decrease drops below its own
      // round-off, so a line search cannot confirm progress; full Newton steps
      // are safe there.
      const double f0 = value(pi, nu, theta, anchor);
      if (-slope < 1e-10 * std::max(1.0, std::abs(f0))) {
        pi += dir;
        continue;
      }
      double t = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Vector trial = pi + t * dir;
        if (value(trial, nu, theta, anchor) <= f0 + 1e-4 * t * slope) {
          pi = trial;
          moved = true;
          break;
        }
        t *= 0.5;
      }
      if (!moved) break;
    }
    return pi;
  }

 private:
  const Matrix& gains_;
  double rho_;
};

}  // namespace

DualSolution dual_subgradient(const StationSpec& station, const SolverConfig& cfg) {
  cfg.validate();
  check_schedulable(station);
  const int k_count = station.pattern_count();
  const int f_count = station.flow_count();
  if (k_count == 1) {
    return DualSolution{static_cast<double>(f_count), Vector::Zero(1),
                        PatternDistribution::point_mass(1, 0), 0};
  }

  // Per-flow normalization leaves the optimal pi and the multipliers unchanged.
  Matrix gains = station.gains();
  for (Eigen::Index f = 0; f < gains.cols(); ++f) gains.col(f) /= gains.col(f).maxCoeff();

  const double alpha = cfg.subgradient_step;
  const AugmentedStep step(gains, alpha);
  const double tol = 1e-3 * cfg.kkt_tol;

  double nu = f_count;
  Vector theta = Vector::Zero(k_count);
  Vector pi = Vector::Constant(k_count, 1.0 / k_count);
  double change = std::numeric_limits<double>::infinity();

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const Vector previous = pi;
    pi = step.minimize(pi, nu, theta, previous);

    const double nu_next = nu - alpha * (1.0 - pi.sum());
    const Vector theta_next = (theta - alpha * pi).cwiseMax(0.0);
    change = std::max({std::abs(nu_next - nu) / alpha, (theta_next - theta).lpNorm<Eigen::Infinity>() / alpha,
                       (pi - previous).lpNorm<Eigen::Infinity>()});
    nu = nu_next;
    theta = theta_next;

    if (change <= tol) {
      Vector clean = pi;
      for (Eigen::Index l = 0; l < k_count; ++l) {
        if (theta(l) > 0.0 || clean(l) < 0.0) clean(l) = 0.0;
      }
      if (!(clean.sum() > 0.0)) break;
      PatternDistribution dist(clean / clean.sum());
      const KktReport report = kkt_report(station, dist, Vector::Ones(f_count), nu, theta);
      if (report.satisfied(cfg.kkt_tol)) return DualSolution{nu, theta, std::move(dist), iter};
    }
  }
  std::ostringstream msg;
  msg << "dual multiplier iteration did not converge for station '" << station.id << "' within "
      << cfg.max_iters << " iterations";
  throw ConvergenceError(msg.str(), change);
}

}  // namespace pfmimo

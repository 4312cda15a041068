#include "pfmimo/error.hpp"
#include "pfmimo/linalg.hpp"
#include "pfmimo/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pfmimo {

namespace {

// L_l = sum_f lambda_f A_lf / (A' pi)_f; +inf rows where a served flow has rate 0.
Vector stationarity_lhs(const Matrix& gains, const Vector& pi, const Vector& lambda) {
  const Vector y = gains.transpose() * pi;
  Vector lhs = Vector::Zero(gains.rows());
  for (Eigen::Index f = 0; f < gains.cols(); ++f) {
    if (lambda(f) == 0.0) continue;
    for (Eigen::Index l = 0; l < gains.rows(); ++l) {
      if (gains(l, f) == 0.0) continue;
      lhs(l) += y(f) > 0.0 ? lambda(f) * gains(l, f) / y(f) : std::numeric_limits<double>::infinity();
    }
  }
  return lhs;
}

void check_lambda(const StationSpec& station, const PatternDistribution& pi, const Vector& lambda) {
  if (lambda.size() != station.flow_count()) throw DomainError("one multiplier per flow expected");
  if (pi.size() != station.pattern_count()) throw DomainError("distribution length != pattern count");
}

}  // namespace

KktReport kkt_report(const StationSpec& station, const PatternDistribution& pi, const Vector& lambda,
                     double nu, const Vector& theta) {
  check_lambda(station, pi, lambda);
  if (theta.size() != station.pattern_count()) throw DomainError("one theta per pattern expected");
  const Vector lhs = stationarity_lhs(station.gains(), pi.pi(), lambda);
  KktReport r;
  r.nu = nu;
  r.theta = theta;
  r.stationarity_residual = (lhs.array() - nu + theta.array()).abs().maxCoeff();
  r.complementary_slackness = (theta.array() * pi.pi().array()).abs().maxCoeff();
  r.dual_feasibility_violation = std::max(0.0, -theta.minCoeff());
  return r;
}

KktReport kkt_report(const StationSpec& station, const PatternDistribution& pi, const Vector& lambda,
                     double support_tol) {
  check_lambda(station, pi, lambda);
  const Vector lhs = stationarity_lhs(station.gains(), pi.pi(), lambda);
  const double nu = lhs.maxCoeff();
  Vector theta(lhs.size());
  for (Eigen::Index l = 0; l < lhs.size(); ++l) {
    theta(l) = pi[static_cast<int>(l)] > support_tol ? 0.0 : nu - lhs(l);
  }
  if (!std::isfinite(nu)) {
    KktReport r;
    r.nu = nu;
    r.theta = theta;
    r.stationarity_residual = std::numeric_limits<double>::infinity();
    r.complementary_slackness = std::numeric_limits<double>::infinity();
    return r;
  }
  return kkt_report(station, pi, lambda, nu, theta);
}

RecoveredDistribution recover_pi(const PatternMatrix& patterns, double nu, const Vector& theta,
                                 const SolverConfig& cfg) {
  StationSpec station("recover", [&] {
    std::vector<std::string> names;
    for (int f = 0; f < patterns.flows(); ++f) names.push_back("f" + std::to_string(f));
    return names;
  }(), patterns, 1.0);
  return recover_pi(station, nu, theta, cfg);
}

RecoveredDistribution recover_pi(const StationSpec& station, double nu, const Vector& theta,
                                 const SolverConfig& cfg) {
  const int k_count = station.pattern_count();
  const int f_count = station.flow_count();
  if (theta.size() != k_count) throw DomainError("one theta per pattern expected");
  if (k_count == 1) return RecoveredDistribution{PatternDistribution::point_mass(1, 0), true};

  // Per-flow scaling changes the rate targets but not pi; unit columns keep
  // the pattern blocks well conditioned.
  Matrix gains = station.gains();
  for (Eigen::Index f = 0; f < gains.cols(); ++f) gains.col(f) /= gains.col(f).maxCoeff();
  if (linalg::rank(gains) < f_count) {
    throw UnsupportedStructureError("pattern matrix of station '" + station.id +
                                    "' lacks full column rank");
  }
  const Vector rhs = nu * Vector::Ones(k_count) - theta;

  // Row block X: prefer patterns in use (smallest theta).
  std::vector<int> order(static_cast<std::size_t>(k_count));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int l, int m) { return theta(l) < theta(m); });
  Matrix reordered(k_count, f_count);
  for (int r = 0; r < k_count; ++r) reordered.row(r) = gains.row(order[static_cast<std::size_t>(r)]);
  const std::vector<int> picked = linalg::independent_rows(reordered);

  Matrix block(f_count, f_count);
  Vector block_rhs(f_count);
  for (int r = 0; r < f_count; ++r) {
    const int row = order[static_cast<std::size_t>(picked[static_cast<std::size_t>(r)])];
    block.row(r) = gains.row(row);
    block_rhs(r) = rhs(row);
  }
  if ((block_rhs.array() <= 0.0).any()) {
    throw InconsistentMultipliersError("nu - theta is not positive on the chosen pattern block");
  }
  const auto mu = linalg::gauss_solve(block, block_rhs);
  if (!mu || !((mu->array() > 0.0).all())) {
    throw InconsistentMultipliersError("multipliers imply a non-positive flow rate");
  }
  const Vector target = mu->cwiseInverse();

  // Multipliers known to kkt_tol give rate targets known to cond(X) kkt_tol.
  const auto inverse = linalg::gauss_solve_many(block, Matrix::Identity(f_count, f_count));
  const double cond = inverse ? block.cwiseAbs().rowwise().sum().maxCoeff() *
                                    inverse->cwiseAbs().rowwise().sum().maxCoeff()
                              : 1.0;
  const double tol = std::max(cfg.kkt_tol, 1e-9) * std::max(1.0, cond);

  // Complementary slackness: patterns with positive theta carry no weight.
  std::vector<int> support;
  for (int l = 0; l < k_count; ++l) {
    if (theta(l) <= cfg.kkt_tol) support.push_back(l);
  }
  if (support.empty()) throw InconsistentMultipliersError("every pattern has positive theta");
  const auto s_count = static_cast<Eigen::Index>(support.size());
  Matrix system(f_count + 1, s_count);
  for (Eigen::Index j = 0; j < s_count; ++j) {
    system.col(j).head(f_count) = gains.row(support[static_cast<std::size_t>(j)]).transpose();
    system(f_count, j) = 1.0;
  }
  Vector system_rhs(f_count + 1);
  system_rhs.head(f_count) = target;
  system_rhs(f_count) = 1.0;

  const auto reduced = linalg::min_norm_nonnegative(system, system_rhs, tol);
  if (!reduced) {
    throw InconsistentMultipliersError("no non-negative pattern distribution matches the multipliers");
  }
  Vector pi = Vector::Zero(k_count);
  for (Eigen::Index j = 0; j < s_count; ++j) pi(support[static_cast<std::size_t>(j)]) = (*reduced)(j);
  if (std::abs(pi.sum() - 1.0) > tol) {
    throw InconsistentMultipliersError("recovered distribution sums to " + std::to_string(pi.sum()));
  }
  const bool unique = linalg::rank(system) == s_count;
  return RecoveredDistribution{PatternDistribution(pi / pi.sum()), unique};
}

}  // namespace pfmimo

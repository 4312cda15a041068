#include "pfmimo/error.hpp"
#include "pfmimo/model.hpp"
#include "pfmimo/simplex.hpp"
#include "pfmimo/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pfmimo {

namespace {

struct FlowRef {
  std::size_t station;
  int column;
  std::string name;
};

std::vector<FlowRef> enumerate_flows(std::span<const StationSpec> stations) {
  std::vector<FlowRef> flows;
  for (std::size_t i = 0; i < stations.size(); ++i) {
    for (int f = 0; f < stations[i].flow_count(); ++f) {
      flows.push_back({i, f, stations[i].flows[static_cast<std::size_t>(f)]});
    }
  }
  return flows;
}

// Separated solve for load weights lambda (global flow order).
struct WeightedSolution {
  AttemptRates attempt{Vector()};
  std::vector<PatternDistribution> distributions;
  Vector capacity;  // bits/us per flow, global order
};

WeightedSolution solve_weighted(std::span<const StationSpec> stations, const MacParams& mac,
                                const Vector& lambda, const SolverConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(stations.size());
  Vector station_weight(n);
  std::vector<Vector> per_station;
  Eigen::Index offset = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int count = stations[static_cast<std::size_t>(i)].flow_count();
    per_station.push_back(lambda.segment(offset, count));
    station_weight(i) = per_station.back().sum();
    offset += count;
  }

  WeightedSolution out;
  out.attempt = solve_attempt_rates(airtime_shares(station_weight), mac.a(), cfg);
  out.capacity.resize(lambda.size());
  offset = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& station = stations[static_cast<std::size_t>(i)];
    out.distributions.push_back(
        solve_pattern_distribution(station, per_station[static_cast<std::size_t>(i)], cfg));
    out.capacity.segment(offset, station.flow_count()) =
        flow_throughput(out.attempt, static_cast<std::size_t>(i), station, out.distributions.back(), mac);
    offset += station.flow_count();
  }
  return out;
}

Vector log_caps(const std::vector<FlowRef>& flows, const LoadCaps& caps) {
  Vector c = Vector::Constant(static_cast<Eigen::Index>(flows.size()),
                              std::numeric_limits<double>::infinity());
  for (std::size_t g = 0; g < flows.size(); ++g) {
    if (auto it = caps.caps.find(flows[g].name); it != caps.caps.end()) {
      c(static_cast<Eigen::Index>(g)) = std::log(it->second);
    }
  }
  return c;
}

// Dual of the capped program:
//   phi(lambda) = sum_f (1 - lambda_f) c_f + max_{x~, pi} sum_f lambda_f log s_f,
// minimized over lambda_f in [lambda_min, 1] for capped flows (lambda = 1
// elsewhere). grad_f = log s_f(lambda) - c_f.
class CapDual {
 public:
  CapDual(std::span<const StationSpec> stations, const MacParams& mac, Vector caps,
          const SolverConfig& cfg)
      : stations_(stations), mac_(mac), log_cap_(std::move(caps)), cfg_(cfg) {}

  struct Eval {
    double value;
    Vector grad;  // zero on uncapped flows
    WeightedSolution solution;
  };

  Eval evaluate(const Vector& lambda) const {
    WeightedSolution sol = solve_weighted(stations_, mac_, lambda, cfg_);
    const Vector log_s = sol.capacity.array().log().matrix();
    double value = lambda.dot(log_s);
    Vector grad = Vector::Zero(lambda.size());
    for (Eigen::Index f = 0; f < lambda.size(); ++f) {
      if (std::isfinite(log_cap_(f))) {
        value += (1.0 - lambda(f)) * log_cap_(f);
        grad(f) = log_s(f) - log_cap_(f);
      }
    }
    return {value, std::move(grad), std::move(sol)};
  }

  Vector project(Vector lambda) const {
    for (Eigen::Index f = 0; f < lambda.size(); ++f) {
      lambda(f) = std::isfinite(log_cap_(f)) ? std::clamp(lambda(f), kLambdaMin, 1.0) : 1.0;
    }
    return lambda;
  }

  static constexpr double kLambdaMin = 1e-9;

 private:
  std::span<const StationSpec> stations_;
  const MacParams& mac_;
  Vector log_cap_;
  const SolverConfig& cfg_;
};

std::pair<Vector, WeightedSolution> minimize_cap_dual(const CapDual& dual, Vector lambda,
                                                      const SolverConfig& cfg) {
  auto current = dual.evaluate(lambda);
  double step = 1.0;
  double mapping = std::numeric_limits<double>::infinity();
  constexpr int kMaxOuter = 5000;
  for (int iter = 0; iter < kMaxOuter; ++iter) {
    mapping = (dual.project(lambda - current.grad) - lambda).lpNorm<Eigen::Infinity>();
    if (mapping <= 1e-10) break;

    Vector next;
    CapDual::Eval trial{0.0, Vector(), {}};
    for (;;) {
      next = dual.project(lambda - step * current.grad);
      trial = dual.evaluate(next);
      const Vector d = next - lambda;
      if (trial.value <= current.value + current.grad.dot(d) + d.squaredNorm() / (2.0 * step) + 1e-14 ||
          step < 1e-12) {
        break;
      }
      step *= 0.5;
    }
    const Vector s = next - lambda;
    const Vector y = trial.grad - current.grad;
    lambda = std::move(next);
    current = std::move(trial);
    // Barzilai-Borwein step for the next iterate
    const double sy = s.dot(y);
    step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-6, 1e6) : std::min(2.0 * step, 1e6);
  }
  if (mapping > std::max(cfg.kkt_tol, 1e-8)) {
    throw ConvergenceError("load-multiplier iteration did not converge", mapping);
  }
  return {lambda, std::move(current.solution)};
}

}  // namespace

Allocation solve_scenario(std::span<const StationSpec> stations, const MacParams& mac,
                          const LoadCaps& caps, const SolverConfig& cfg) {
  cfg.validate();
  validate_scenario(stations);
  caps.validate(stations);
  for (const auto& s : stations) check_schedulable(s);

  const auto flows = enumerate_flows(stations);
  const auto f_total = static_cast<Eigen::Index>(flows.size());
  const Vector log_cap = log_caps(flows, caps);

  Vector lambda = Vector::Ones(f_total);
  WeightedSolution sol = solve_weighted(stations, mac, lambda, cfg);
  const bool binding = ((sol.capacity.array().log() - log_cap.array()) > 0.0).any();
  if (binding) {
    CapDual dual(stations, mac, log_cap, cfg);
    std::tie(lambda, sol) = minimize_cap_dual(dual, lambda, cfg);
  }

  Allocation out;
  out.attempt = sol.attempt;
  out.distributions = sol.distributions;
  out.objective = 0.0;
  for (Eigen::Index g = 0; g < f_total; ++g) {
    const auto& name = flows[static_cast<std::size_t>(g)].name;
    const double capacity = sol.capacity(g);
    const double delivered = std::isfinite(log_cap(g)) ? std::min(capacity, std::exp(log_cap(g))) : capacity;
    out.flow_capacity[name] = capacity;
    out.flow_rates[name] = delivered;
    out.multipliers.lambda[name] = lambda(g);
    out.objective += std::log(delivered);
  }

  Eigen::Index offset = 0;
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const auto& station = stations[i];
    out.station_airtimes.push_back(station_airtime(out.attempt, i, mac.a()));
    const Vector station_lambda = lambda.segment(offset, station.flow_count());
    const KktReport report = kkt_report(station, out.distributions[i], station_lambda, cfg.simplex_tol);
    out.multipliers.nu.push_back(report.nu);
    out.multipliers.theta.push_back(report.theta);
    out.kkt.push_back({report.stationarity_residual, report.complementary_slackness,
                       report.dual_feasibility_violation});
    offset += station.flow_count();
  }
  return out;
}

// --- joint reference solver --------------------------------------------------------

namespace {

constexpr double kTauMin = 1e-6;
constexpr double kTauMax = 1.0 - 1e-9;

// smooth lower approximation of min(u, c) and its derivative in u
std::pair<double, double> soft_min(double u, double c, double temperature) {
  if (!std::isfinite(c)) return {u, 1.0};
  if (temperature <= 0.0) return u <= c ? std::pair{u, 1.0} : std::pair{c, 0.0};
  const double z = (u - c) / temperature;
  // min(u, c) - T log(1 + e^{-|z|})
  const double value = std::min(u, c) - temperature * std::log1p(std::exp(-std::abs(z)));
  const double weight = z > 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
  return {value, weight};
}

struct JointPoint {
  Vector log_odds;
  std::vector<Vector> pi;
};

class JointObjective {
 public:
  JointObjective(std::span<const StationSpec> stations, const MacParams& mac, Vector log_cap)
      : stations_(stations), mac_(mac), log_cap_(std::move(log_cap)) {
    for (const auto& s : stations) gains_.push_back(s.gains());
  }

  // log s_f for every flow (global order) and the station airtimes T_j
  std::pair<Vector, Vector> log_rates(const Vector& log_odds, const std::vector<Vector>& pi) const {
    const auto n = log_odds.size();
    Vector tau(n);
    for (Eigen::Index i = 0; i < n; ++i) tau(i) = 1.0 / (1.0 + std::exp(-log_odds(i)));
    const AttemptRates rates(tau);
    Vector airtime(n);
    Vector out(log_cap_.size());
    Eigen::Index g = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      airtime(i) = station_airtime_closed_form(rates, static_cast<std::size_t>(i), mac_.a());
      const double log_share = std::log(success_airtime(rates, static_cast<std::size_t>(i), mac_.a()));
      const Vector y = gains_[static_cast<std::size_t>(i)].transpose() * pi[static_cast<std::size_t>(i)];
      for (Eigen::Index f = 0; f < y.size(); ++f) {
        out(g++) = y(f) > 0.0 ? log_share + std::log(y(f) / mac_.t_s())
                              : -std::numeric_limits<double>::infinity();
      }
    }
    return {out, airtime};
  }

  double value(const JointPoint& p, double temperature) const {
    const auto [log_s, airtime] = log_rates(p.log_odds, p.pi);
    double total = 0.0;
    for (Eigen::Index g = 0; g < log_s.size(); ++g) {
      if (!std::isfinite(log_s(g))) return -std::numeric_limits<double>::infinity();
      total += soft_min(log_s(g), log_cap_(g), temperature).first;
    }
    return total;
  }

  JointPoint gradient(const JointPoint& p, double temperature) const {
    const auto [log_s, airtime] = log_rates(p.log_odds, p.pi);
    const auto n = p.log_odds.size();
    JointPoint grad{Vector::Zero(n), {}};
    Eigen::Index g = 0;
    double total_weight = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& gains = gains_[static_cast<std::size_t>(i)];
      const auto& pi = p.pi[static_cast<std::size_t>(i)];
      const Vector y = gains.transpose() * pi;
      Vector dpi = Vector::Zero(pi.size());
      double station_weight = 0.0;
      for (Eigen::Index f = 0; f < y.size(); ++f, ++g) {
        const double w = soft_min(log_s(g), log_cap_(g), temperature).second;
        station_weight += w;
        dpi += w / y(f) * gains.col(f);
      }
      grad.log_odds(i) += station_weight;
      total_weight += station_weight;
      grad.pi.push_back(std::move(dpi));
    }
    // d log X / d x~_j = T_j
    grad.log_odds -= total_weight * airtime;
    return grad;
  }

 private:
  std::span<const StationSpec> stations_;
  const MacParams& mac_;
  Vector log_cap_;
  std::vector<Matrix> gains_;
};

JointPoint project(const JointPoint& p) {
  const double lo = std::log(kTauMin / (1.0 - kTauMin));
  const double hi = std::log(kTauMax / (1.0 - kTauMax));
  JointPoint out{p.log_odds.cwiseMax(lo).cwiseMin(hi), {}};
  for (const auto& pi : p.pi) out.pi.push_back(project_onto_simplex(pi));
  return out;
}

JointPoint axpy(const JointPoint& p, double t, const JointPoint& d) {
  JointPoint out{p.log_odds + t * d.log_odds, {}};
  for (std::size_t i = 0; i < p.pi.size(); ++i) out.pi.push_back(p.pi[i] + t * d.pi[i]);
  return out;
}

double dot(const JointPoint& a, const JointPoint& b) {
  double s = a.log_odds.dot(b.log_odds);
  for (std::size_t i = 0; i < a.pi.size(); ++i) s += a.pi[i].dot(b.pi[i]);
  return s;
}

}  // namespace

JointSolution solve_joint(std::span<const StationSpec> stations, const MacParams& mac,
                          const LoadCaps& caps, const SolverConfig& cfg) {
  cfg.validate();
  validate_scenario(stations);
  caps.validate(stations);
  for (const auto& s : stations) check_schedulable(s);

  const auto flows = enumerate_flows(stations);
  const JointObjective objective(stations, mac, log_caps(flows, caps));

  JointPoint point{Vector::Zero(static_cast<Eigen::Index>(stations.size())), {}};
  for (const auto& s : stations) point.pi.push_back(Vector::Constant(s.pattern_count(), 1.0 / s.pattern_count()));

  std::vector<double> temperatures{0.0};
  if (!caps.empty()) temperatures = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};

  int iterations = 0;
  for (const double temperature : temperatures) {
    double value = objective.value(point, temperature);
    double step = 1.0;
    int quiet = 0;
    while (iterations < cfg.max_iters) {
      ++iterations;
      const JointPoint grad = objective.gradient(point, temperature);
      JointPoint next;
      double next_value = 0.0;
      double gap = 0.0;
      for (;;) {
        next = project(axpy(point, step, grad));
        next_value = objective.value(next, temperature);
        const JointPoint delta = axpy(next, -1.0, point);
        gap = dot(delta, delta);
        if (next_value >= value + dot(grad, delta) - gap / (2.0 * step) || step < 1e-14) break;
        step *= 0.5;
      }
      const double improvement = next_value - value;
      if (next_value >= value) {
        point = std::move(next);
        value = next_value;
      }
      const bool small = improvement <= cfg.objective_tol * std::max(1.0, std::abs(value));
      quiet = small ? quiet + 1 : 0;
      if (std::sqrt(gap) / step < 1e-10 || quiet >= 5) break;
      step *= 2.0;
    }
  }

  JointSolution out;
  out.iterations = iterations;
  Vector tau(point.log_odds.size());
  for (Eigen::Index i = 0; i < tau.size(); ++i) tau(i) = 1.0 / (1.0 + std::exp(-point.log_odds(i)));
  out.attempt = AttemptRates(tau);
  for (auto& pi : point.pi) out.distributions.emplace_back(pi / pi.sum());
  out.objective = objective.value(point, 0.0);
  return out;
}

}  // namespace pfmimo

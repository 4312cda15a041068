// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 1 when
// any criterion fails.

#include "scenarios.hpp"

#include <pfmimo/channel.hpp>
#include <pfmimo/error.hpp>
#include <pfmimo/mac_sim.hpp>
#include <pfmimo/model.hpp>
#include <pfmimo/solver.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace pfmimo {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Vector example_pi() {
  Vector pi(4);
  pi << 1.0 / 3, 0.0, 1.0 / 3, 1.0 / 3;
  return pi;
}

// 802.11a/g-like timing; the worked example does not depend on it.
const MacParams kMac(9.0, 300.0);

std::vector<std::vector<StationSpec>> random_corpus(std::uint64_t seed, int count) {
  Rng rng(seed);
  std::vector<std::vector<StationSpec>> out;
  for (int t = 0; t < count; ++t) out.push_back(testing::random_scenario(rng));
  return out;
}

Outcome worked_example() {
  constexpr double kPiTol = 1e-3;
  constexpr double kMaxSeconds = 1.0;
  const auto start = Clock::now();
  const std::vector<StationSpec> wlan{testing::example_ap(1500.0)};
  const auto alloc = solve_scenario(wlan, kMac, LoadCaps{}, SolverConfig{});
  const double elapsed = seconds_since(start);
  const double err = (alloc.distributions[0].pi() - example_pi()).lpNorm<Eigen::Infinity>();
  const double t_ap = alloc.station_airtimes[0];
  const double tau = alloc.attempt.tau()(0);
  std::ostringstream msg;
  msg << "|pi - [1/3,0,1/3,1/3]|_inf = " << err << ", T_AP = " << t_ap << ", tau_AP = " << tau << ", "
      << elapsed << " s";
  return {err <= kPiTol && t_ap == 1.0 && tau == 1.0 && elapsed < kMaxSeconds, msg.str()};
}

Outcome airtime_metrics() {
  constexpr double kStreamsTol = 1e-3;
  constexpr double kFractionTol = 1e-3;
  constexpr double kTxopTol = 1e-6;
  const auto ap = testing::example_ap(1500.0);
  const std::vector<StationSpec> wlan{ap};
  const auto alloc = solve_scenario(wlan, kMac, LoadCaps{}, SolverConfig{});
  const auto m = flow_airtime_metrics(ap, alloc.distributions[0], alloc.station_airtimes[0]);
  Vector streams(4);
  streams << 1, 2, 2, 2;
  Vector fraction(4);
  fraction << 0.1429, 0.2857, 0.2857, 0.2857;
  const double e1 = (m.equivalent_single_stream - streams).lpNorm<Eigen::Infinity>();
  const double e2 = (m.stream_fraction - fraction).lpNorm<Eigen::Infinity>();
  const double e3 = (m.txop_fraction.array() - 2.0 / 3.0).abs().maxCoeff();
  std::ostringstream msg;
  msg << "streams err " << e1 << ", fraction err " << e2 << ", txop err " << e3;
  return {e1 <= kStreamsTol && e2 <= kFractionTol && e3 <= kTxopTol, msg.str()};
}

Outcome airtime_share_property() {
  constexpr double kAirtimeTol = 1e-6;
  constexpr double kKktTol = 1e-6;
  constexpr double kMaxSeconds = 30.0;
  const auto start = Clock::now();
  double worst_share = 0.0;
  double worst_sum = 0.0;
  double worst_kkt = 0.0;
  for (const auto& wlan : random_corpus(2024, 100)) {
    const auto alloc = solve_scenario(wlan, kMac, LoadCaps{}, SolverConfig{});
    int total = 0;
    for (const auto& s : wlan) total += s.flow_count();
    double sum = 0.0;
    for (std::size_t i = 0; i < wlan.size(); ++i) {
      const double target = static_cast<double>(wlan[i].flow_count()) / total;
      worst_share = std::max(worst_share, std::abs(alloc.station_airtimes[i] - target));
      worst_kkt = std::max(worst_kkt, alloc.kkt[i].stationarity);
      sum += alloc.station_airtimes[i];
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
  }
  const double elapsed = seconds_since(start);
  std::ostringstream msg;
  msg << "100 scenarios: max |T_i - |F_i|/|F|| = " << worst_share << ", max |sum T - 1| = " << worst_sum
      << ", max stationarity = " << worst_kkt << ", " << elapsed << " s";
  return {worst_share <= kAirtimeTol && worst_sum <= kAirtimeTol && worst_kkt <= kKktTol && elapsed < kMaxSeconds,
          msg.str()};
}

Outcome oracle_equivalence() {
  constexpr double kRateTol = 1e-4;
  constexpr double kObjectiveTol = 1e-6;
  const SolverConfig cfg;
  double worst_rates = 0.0;
  double worst_objective = 0.0;
  double worst_recovery = 0.0;
  for (const auto& wlan : random_corpus(2024, 100)) {
    const auto alloc = solve_scenario(wlan, kMac, LoadCaps{}, cfg);
    for (std::size_t i = 0; i < wlan.size(); ++i) {
      const auto& s = wlan[i];
      const Matrix g = s.gains();
      const Vector w = Vector::Ones(s.flow_count());
      const Vector primal = alloc.distributions[i].pi();
      const auto dual = dual_subgradient(s, cfg);
      const Matrix v = s.patterns.as_real();
      worst_rates = std::max(worst_rates,
                             (v.transpose() * (primal - dual.distribution.pi())).lpNorm<Eigen::Infinity>());
      const double best = pattern_objective(g, w, primal);
      worst_objective = std::max(worst_objective, std::abs(best - pattern_objective(g, w, dual.distribution.pi())));
      const auto back = recover_pi(s, alloc.multipliers.nu[i], alloc.multipliers.theta[i], cfg);
      worst_recovery = std::max(worst_recovery, std::abs(best - pattern_objective(g, w, back.distribution.pi())));
    }
  }
  std::ostringstream msg;
  msg << "max |V'(pi_primal - pi_dual)| = " << worst_rates << ", objective gap " << worst_objective
      << ", recover_pi objective gap " << worst_recovery;
  return {worst_rates <= kRateTol && worst_objective <= kObjectiveTol && worst_recovery <= kObjectiveTol,
          msg.str()};
}

Outcome model_validation() {
  // Coverage is pooled over every (run, statistic) pair; the fraction of runs
  // in which all statistics fall inside their intervals is reported as well.
  constexpr double kCoverage = 0.95;
  constexpr int kRuns = 40;
  constexpr std::uint64_t kSlots = 1'000'000;
  constexpr double kMaxSeconds = 60.0;
  const auto start = Clock::now();
  Rng rng(77);
  long inside = 0;
  long total = 0;
  int clean_runs = 0;
  for (int run = 0; run < kRuns; ++run) {
    const auto wlan = testing::random_scenario(rng);
    Vector tau(static_cast<Eigen::Index>(wlan.size()));
    for (Eigen::Index i = 0; i < tau.size(); ++i) tau(i) = 0.05 + 0.45 * rng.uniform();
    std::vector<PatternDistribution> dists;
    for (const auto& s : wlan) {
      Vector p(s.pattern_count());
      for (Eigen::Index k = 0; k < p.size(); ++k) p(k) = rng.exponential();
      dists.emplace_back(p / p.sum());
    }
    SimConfig cfg;
    cfg.slots = kSlots;
    cfg.seed = 1000 + static_cast<std::uint64_t>(run);
    cfg.mac = kMac;
    const AttemptRates rates(tau);
    const auto rows = compare_with_model(wlan, rates, dists, cfg.mac, simulate(wlan, rates, dists, cfg));
    bool all = true;
    for (const auto& row : rows) {
      inside += row.within_ci ? 1 : 0;
      all = all && row.within_ci;
      ++total;
    }
    clean_runs += all ? 1 : 0;
  }
  const double elapsed = seconds_since(start);
  const double coverage = static_cast<double>(inside) / static_cast<double>(total);
  std::ostringstream msg;
  msg << inside << "/" << total << " statistics inside 99% CI (" << coverage << "), " << clean_runs << "/" << kRuns
      << " runs fully inside, " << elapsed << " s";
  return {coverage >= kCoverage && elapsed < kMaxSeconds, msg.str()};
}

Outcome log_convexity() {
  constexpr double kTol = 1e-9;
  constexpr int kSegments = 1000;
  const double worst = check_log_convexity(testing::example_ap(), 3, kMac.a(), kSegments, 11);
  std::ostringstream msg;
  msg << "max midpoint violation over " << kSegments << " segments = " << worst;
  return {worst <= kTol, msg.str()};
}

Outcome rayleigh_sweep() {
  constexpr double kDominanceTol = 1e-9;
  constexpr double kPiTol = 0.05;
  constexpr double kPatternTwoMax = 0.01;
  constexpr double kMaxSeconds = 120.0;
  const auto start = Clock::now();
  ChannelConfig ch;
  ch.ap_antennas = 8;
  ch.client_antennas = {4, 4, 4, 4};
  ch.draws = 10000;
  ch.seed = 2013;
  std::vector<double> snr;
  for (int db = 0; db <= 40; db += 5) snr.push_back(db);
  const auto sweep = snr_sweep(testing::example_patterns(), snr, ch, SolverConfig{});
  const double elapsed = seconds_since(start);

  double worst_gap = std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (std::size_t j = 0; j < sweep.points.size(); ++j) {
    const auto& p = sweep.points[j];
    if (p.feasible) worst_gap = std::min(worst_gap, p.sumlog_pf - p.sumlog_uniform);
    if (j > 0) {
      monotone = monotone &&
                 (p.payloads.entries().array() >= sweep.points[j - 1].payloads.entries().array()).all();
    }
  }
  const auto& top = sweep.points.back();
  const double err = (top.pf.pi() - example_pi()).lpNorm<Eigen::Infinity>();
  std::ostringstream msg;
  msg << "min PF - uniform sum-log = " << worst_gap << ", D monotone " << (monotone ? "yes" : "no")
      << ", 40 dB |pi - pi*|_inf = " << err << ", pattern 2 weight " << top.pf[1] << ", " << elapsed << " s";
  return {worst_gap >= -kDominanceTol && monotone && top.feasible && err <= kPiTol && top.pf[1] <= kPatternTwoMax &&
              elapsed < kMaxSeconds,
          msg.str()};
}

Outcome finite_load() {
  constexpr double kCapTol = 1e-6;
  constexpr double kShapeTol = 1e-9;
  const std::vector<StationSpec> wlan{
      StationSpec("a", {"a1"}, PatternMatrix::identity(1), 1000.0),
      StationSpec("b", {"b1", "b2"}, PatternMatrix::identity(2), 1000.0),
  };
  const auto free = solve_scenario(wlan, kMac, LoadCaps{}, SolverConfig{});
  const double base = free.flow_rates.at("a1");
  std::vector<double> caps;
  std::vector<double> objective;
  double worst_cap = 0.0;
  for (double frac : {0.2, 0.35, 0.5, 0.65, 0.8}) {
    const double cap = frac * base;
    const auto alloc = solve_scenario(wlan, kMac, LoadCaps{{{"a1", cap}}}, SolverConfig{});
    worst_cap = std::max(worst_cap, std::abs(alloc.flow_rates.at("a1") - cap) / cap);
    caps.push_back(cap);
    objective.push_back(alloc.objective);
  }
  bool monotone = true;
  bool concave = true;
  for (std::size_t j = 1; j < objective.size(); ++j) monotone = monotone && objective[j] >= objective[j - 1] - kShapeTol;
  for (std::size_t j = 1; j + 1 < objective.size(); ++j) {
    concave = concave && objective[j + 1] - 2.0 * objective[j] + objective[j - 1] <= kShapeTol;
  }
  std::ostringstream msg;
  msg << "max relative |rate - cap| = " << worst_cap << ", objective non-decreasing in cap "
      << (monotone ? "yes" : "no") << ", concave " << (concave ? "yes" : "no");
  return {worst_cap <= kCapTol && monotone && concave, msg.str()};
}

}  // namespace
}  // namespace pfmimo

int main() {
  using pfmimo::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"worked example allocation", pfmimo::worked_example},
      {"flow airtime metrics", pfmimo::airtime_metrics},
      {"airtime shares and KKT on random WLANs", pfmimo::airtime_share_property},
      {"primal, dual and recovered distributions agree", pfmimo::oracle_equivalence},
      {"MAC simulation matches the analytic model", pfmimo::model_validation},
      {"midpoint log-convexity", pfmimo::log_convexity},
      {"Rayleigh SNR sweep", pfmimo::rayleigh_sweep},
      {"finite offered load", pfmimo::finite_load},
  };
  int failures = 0;
  int index = 1;
  for (const auto& [name, run] : criteria) {
    Outcome out;
    try {
      out = run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %d %s: %s\n", out.pass ? "PASS" : "FAIL", index, name, out.detail.c_str());
    std::fflush(stdout);
    failures += out.pass ? 0 : 1;
    ++index;
  }
  return failures == 0 ? 0 : 1;
}

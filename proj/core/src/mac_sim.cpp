#include "pfmimo/mac_sim.hpp"

#include "pfmimo/error.hpp"
#include "pfmimo/model.hpp"
#include "pfmimo/rng.hpp"

#include <algorithm>
#include <cmath>

namespace pfmimo {

namespace {

constexpr double kZ99 = 2.5758293035489004;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Estimate proportion(std::uint64_t hits, std::uint64_t n) {
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  return {p, kZ99 * std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
}

// Ratio estimator sum(Y) / sum(Z) with delta-method variance.
struct RatioSums {
  double y = 0.0;
  double yy = 0.0;
  double yz = 0.0;
};

Estimate ratio(const RatioSums& s, double z, double zz, std::uint64_t n) {
  const double nd = static_cast<double>(n);
  const double r = s.y / z;
  const double z_mean = z / nd;
  const double second_moment = (s.yy - 2.0 * r * s.yz + r * r * zz) / nd;
  const double var = std::max(0.0, second_moment) / (nd * z_mean * z_mean);
  return {r, kZ99 * std::sqrt(var)};
}

int draw_pattern(Rng& rng, const Vector& cdf) {
  const double u = rng.uniform();
  const auto k = cdf.size();
  for (Eigen::Index j = 0; j < k - 1; ++j) {
    if (u < cdf(j)) return static_cast<int>(j);
  }
  return static_cast<int>(k - 1);
}

}  // namespace

SimResult simulate(std::span<const StationSpec> stations, const AttemptRates& rates,
                   std::span<const PatternDistribution> distributions, const SimConfig& cfg) {
  validate_scenario(stations);
  const std::size_t n = stations.size();
  if (rates.size() != n || distributions.size() != n) {
    throw ConfigurationError("simulation needs one attempt rate and one distribution per station");
  }
  if (cfg.slots < 1) throw ConfigurationError("simulation needs at least one slot");

  struct StationState {
    Rng attempts;
    Rng patterns;
    Vector cdf;
    Matrix gains;
    std::size_t flow_offset;
  };
  std::vector<StationState> state;
  std::size_t flow_total = 0;
  SimResult out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = stations[i];
    if (distributions[i].size() != s.pattern_count()) {
      throw ConfigurationError("distribution of station '" + s.id + "' has wrong length");
    }
    Vector cdf(s.pattern_count());
    double acc = 0.0;
    for (int k = 0; k < s.pattern_count(); ++k) cdf(k) = acc += distributions[i][k];
    const std::uint64_t key = fnv1a(s.id);
    state.push_back({Rng(substream_seed(cfg.seed, 2 * key)), Rng(substream_seed(cfg.seed, 2 * key + 1)),
                     std::move(cdf), s.gains(), flow_total});
    flow_total += static_cast<std::size_t>(s.flow_count());
    for (const auto& f : s.flows) out.flow_names.push_back(f);
    out.pattern_counts.emplace_back(static_cast<std::size_t>(s.pattern_count()), 0);
  }
  if ((rates.tau().array() == 1.0).count() >= 2) {
    out.warnings.push_back("two or more stations have tau = 1: every slot collides");
  }

  std::vector<std::uint64_t> thresholds(n);
  for (std::size_t i = 0; i < n; ++i) {
    // transmit iff the 53-bit uniform integer is below tau * 2^53
    thresholds[i] = static_cast<std::uint64_t>(std::ldexp(rates.tau()(static_cast<Eigen::Index>(i)), 53));
  }

  std::vector<std::uint64_t> transmit_slots(n, 0);
  std::vector<std::uint64_t> own_success(n, 0);
  std::vector<RatioSums> flow_sums(flow_total);
  std::vector<std::size_t> transmitters;
  transmitters.reserve(n);

  for (std::uint64_t t = 0; t < cfg.slots; ++t) {
    transmitters.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if ((state[i].attempts.next() >> 11) < thresholds[i]) transmitters.push_back(i);
    }
    if (transmitters.empty()) {
      ++out.idle_slots;
      continue;
    }
    for (std::size_t i : transmitters) ++transmit_slots[i];
    if (transmitters.size() == 1) {
      const std::size_t i = transmitters.front();
      ++out.success_slots;
      ++own_success[i];
      auto& st = state[i];
      const int k = draw_pattern(st.patterns, st.cdf);
      ++out.pattern_counts[i][static_cast<std::size_t>(k)];
      for (Eigen::Index f = 0; f < st.gains.cols(); ++f) {
        const double bits = st.gains(k, f);
        auto& sums = flow_sums[st.flow_offset + static_cast<std::size_t>(f)];
        sums.y += bits;
        sums.yy += bits * bits;
        sums.yz += bits * cfg.mac.t_s();
      }
    } else {
      ++out.collision_slots;
    }
  }

  const std::uint64_t busy = out.success_slots + out.collision_slots;
  const double sigma = cfg.mac.sigma();
  const double ts = cfg.mac.t_s();
  out.slots = cfg.slots;
  out.elapsed_us = sigma * static_cast<double>(out.idle_slots) + ts * static_cast<double>(busy);
  const double zz = sigma * sigma * static_cast<double>(out.idle_slots) + ts * ts * static_cast<double>(busy);

  out.p_idle = proportion(out.idle_slots, cfg.slots);
  for (std::size_t i = 0; i < n; ++i) {
    out.p_success.push_back(proportion(own_success[i], cfg.slots));
    out.p_collision.push_back(proportion(busy - own_success[i], cfg.slots));
    const double tx = static_cast<double>(transmit_slots[i]);
    const RatioSums sums{ts * tx, ts * ts * tx, ts * ts * tx};
    out.airtime.push_back(ratio(sums, out.elapsed_us, zz, cfg.slots));
  }
  for (const auto& sums : flow_sums) out.flow_throughput.push_back(ratio(sums, out.elapsed_us, zz, cfg.slots));
  return out;
}

std::vector<ComparisonRow> compare_with_model(std::span<const StationSpec> stations,
                                              const AttemptRates& rates,
                                              std::span<const PatternDistribution> distributions,
                                              const MacParams& mac, const SimResult& result) {
  std::vector<ComparisonRow> rows;
  auto add = [&](std::string metric, double analytic, const Estimate& e) {
    const double slack = 1e-12 * std::max(1.0, std::abs(analytic));
    rows.push_back({std::move(metric), analytic, e.value, e.ci99,
                    std::abs(e.value - analytic) <= e.ci99 + slack});
  };

  const auto probs = slot_probabilities(rates);
  add("p_idle", probs.idle, result.p_idle);
  std::size_t g = 0;
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const auto& id = stations[i].id;
    const auto idx = static_cast<Eigen::Index>(i);
    add("p_succ[" + id + "]", probs.success(idx), result.p_success[i]);
    add("p_coll[" + id + "]", probs.collision(idx), result.p_collision[i]);
    add("airtime[" + id + "]", station_airtime_closed_form(rates, i, mac.a()), result.airtime[i]);
    const Vector s = flow_throughput(rates, i, stations[i], distributions[i], mac);
    for (Eigen::Index f = 0; f < s.size(); ++f, ++g) {
      add("throughput[" + stations[i].flows[static_cast<std::size_t>(f)] + "]", s(f),
          result.flow_throughput[g]);
    }
  }
  return rows;
}

}  // namespace pfmimo

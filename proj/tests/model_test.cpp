#include "scenarios.hpp"

#include <pfmimo/error.hpp>
#include <pfmimo/model.hpp>
#include <pfmimo/rng.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace pfmimo {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// tau in [0, 0.95] per station, at least one station.
AttemptRates random_rates(Rng& rng, int n) {
  Vector tau(n);
  for (int i = 0; i < n; ++i) tau(i) = 0.95 * rng.uniform();
  return AttemptRates(tau);
}

TEST(MacParams, RatioAndValidation) {
  const MacParams mac(9.0, 90.0);
  EXPECT_DOUBLE_EQ(mac.a(), 0.1);
  EXPECT_THROW(MacParams(0.0, 1.0), ConfigurationError);
  EXPECT_THROW(MacParams(2.0, 1.0), ConfigurationError);
  EXPECT_THROW(MacParams(1.0, -1.0), ConfigurationError);
  EXPECT_DOUBLE_EQ(MacParams::from_ratio(0.25, 40.0).sigma(), 10.0);
}

TEST(AttemptRates, OddsMatchTau) {
  const AttemptRates r(vec({0.0, 0.25, 0.5, 1.0}));
  EXPECT_EQ(r.x()(0), 0.0);
  EXPECT_NEAR(r.x()(1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.x()(2), 1.0, 1e-15);
  EXPECT_EQ(r.x()(3), kInf);
  const AttemptRates back = AttemptRates::from_odds(r.x());
  EXPECT_TRUE(back.tau().isApprox(r.tau(), 1e-12));
  EXPECT_THROW(AttemptRates(vec({1.5})), DomainError);
  EXPECT_THROW(AttemptRates(vec({-0.1})), DomainError);
}

TEST(PatternMatrix, RejectsInvalidShapes) {
  EXPECT_THROW(PatternMatrix({{1, 0}, {0, 0}}), ConfigurationError);   // zero row
  EXPECT_THROW(PatternMatrix({{1, 0}, {2, 0}}), ConfigurationError);   // unschedulable flow
  EXPECT_THROW(PatternMatrix({{1, -1}, {0, 1}}), ConfigurationError);  // negative count
  EXPECT_NO_THROW(PatternMatrix::identity(3));
  EXPECT_EQ(testing::example_patterns().streams(0), 8);
}

TEST(PayloadMatrix, PerFlowBroadcastsColumns) {
  const std::vector<double> bits{100.0, 250.0};
  const auto d = PayloadMatrix::per_flow(3, bits);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(d(k, 0), 100.0);
    EXPECT_EQ(d(k, 1), 250.0);
  }
  EXPECT_THROW(PayloadMatrix(Matrix::Constant(1, 1, -1.0)), ConfigurationError);
}

TEST(StationSpec, ShapeMismatchRejected) {
  EXPECT_THROW(StationSpec("s", {"a", "b"}, PatternMatrix::identity(2), PayloadMatrix::uniform(3, 2, 1.0)),
               ConfigurationError);
  EXPECT_THROW(StationSpec("s", {"a"}, PatternMatrix::identity(2), 1.0), ConfigurationError);
}

TEST(Scenario, DuplicateFlowIdsRejected) {
  const std::vector<StationSpec> s{StationSpec("a", {"f"}, PatternMatrix::identity(1), 1.0),
                                   StationSpec("b", {"f"}, PatternMatrix::identity(1), 1.0)};
  EXPECT_THROW(validate_scenario(s), ConfigurationError);
  EXPECT_THROW(validate_scenario(std::span<const StationSpec>()), ConfigurationError);
}

TEST(PatternDistribution, SimplexInvariant) {
  EXPECT_THROW(PatternDistribution(vec({0.5, 0.6})), DomainError);
  EXPECT_THROW(PatternDistribution(vec({1.5, -0.5})), DomainError);
  EXPECT_NO_THROW(PatternDistribution(vec({0.5, 0.5 + 1e-10})));
}

TEST(BigX, Examples) {
  EXPECT_DOUBLE_EQ(big_x(vec({0, 0, 0}), 0.1), 0.1);
  EXPECT_NEAR(big_x(vec({1, 1}), 0.1), 3.1, 1e-15);
  EXPECT_DOUBLE_EQ(big_x(vec({1}), 1.0), 2.0);
  EXPECT_EQ(big_x(vec({1, kInf}), 0.1), kInf);
  EXPECT_THROW(big_x(vec({-0.1}), 0.1), DomainError);
}

TEST(BigX, StrictlyIncreasingInEachCoordinate) {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    Vector x(3);
    for (int i = 0; i < 3; ++i) x(i) = 5.0 * rng.uniform();
    const int k = t % 3;
    Vector y = x;
    y(k) += 1e-3 + rng.uniform();
    EXPECT_GT(big_x(y, 0.2), big_x(x, 0.2));
  }
}

TEST(SlotProbabilities, Examples) {
  const auto p = slot_probabilities(AttemptRates(vec({0.1, 0.1})));
  EXPECT_NEAR(p.idle, 0.81, 1e-15);
  EXPECT_NEAR(p.success(0), 0.09, 1e-15);
  EXPECT_NEAR(p.collision(1), 0.10, 1e-15);

  const auto sat = slot_probabilities(AttemptRates(vec({1.0})));
  EXPECT_EQ(sat.idle, 0.0);
  EXPECT_EQ(sat.success(0), 1.0);
  EXPECT_EQ(sat.collision(0), 0.0);

  EXPECT_EQ(slot_probabilities(AttemptRates(vec({0.0, 0.5}))).success(0), 0.0);
}

TEST(SlotProbabilities, CloseToOne) {
  Rng rng(3);
  for (int t = 0; t < 500; ++t) {
    const auto rates = random_rates(rng, 1 + t % 5);
    const auto p = slot_probabilities(rates);
    for (Eigen::Index i = 0; i < p.success.size(); ++i) {
      EXPECT_NEAR(p.idle + p.success(i) + p.collision(i), 1.0, 1e-12);
    }
  }
}

TEST(StationThroughput, Examples) {
  const MacParams mac = MacParams::from_ratio(0.1, 50.0);
  EXPECT_DOUBLE_EQ(station_throughput(AttemptRates(vec({1.0})), 0, 1200.0, mac), 1200.0 / 50.0);
  EXPECT_DOUBLE_EQ(station_throughput(AttemptRates::from_odds(vec({1.0})), 0, 1.0, MacParams(1.0, 1.0)), 0.5);
  EXPECT_EQ(station_throughput(AttemptRates(vec({0.3, 0.2})), 1, 0.0, mac), 0.0);
}

TEST(StationThroughput, SlotFormAgrees) {
  Rng rng(5);
  for (int t = 0; t < 500; ++t) {
    const int n = 1 + t % 4;
    const auto rates = random_rates(rng, n);
    const MacParams mac = MacParams::from_ratio(0.01 + 0.99 * rng.uniform(), 10.0 + 100.0 * rng.uniform());
    const double bits = 1.0 + 1e4 * rng.uniform();
    for (int i = 0; i < n; ++i) {
      const double lhs = station_throughput(rates, static_cast<std::size_t>(i), bits, mac);
      const double rhs = station_throughput_slot_form(rates, static_cast<std::size_t>(i), bits, mac);
      EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(std::abs(rhs), 1e-300));
    }
  }
}

TEST(StationAirtime, Examples) {
  EXPECT_DOUBLE_EQ(station_airtime(AttemptRates(vec({1.0})), 0, 0.1), 1.0);
  EXPECT_DOUBLE_EQ(station_airtime(AttemptRates(vec({0.0, 0.4})), 0, 0.1), 0.0);

  // root of 0.225 c^2 + 0.1 c - 0.1 = 0
  const double c = (-0.1 + std::sqrt(0.01 + 4.0 * 0.225 * 0.1)) / (2.0 * 0.225);
  const AttemptRates exact(vec({c / 2.0, c / 2.0}));
  EXPECT_NEAR(station_airtime(exact, 0, 0.1), 0.5, 1e-12);
  EXPECT_NEAR(station_airtime(AttemptRates(vec({0.2403, 0.2403})), 1, 0.1), 0.5, 1e-3);
}

TEST(StationAirtime, TwoSaturatedStationsAreDegenerate) {
  EXPECT_THROW(station_airtime(AttemptRates(vec({1.0, 1.0})), 0, 0.1), DegenerateSaturationError);
  // one saturated station: the others see P_coll = 1 - P_succ but are silent-limit well defined
  EXPECT_DOUBLE_EQ(station_airtime(AttemptRates(vec({1.0, 0.0})), 0, 0.1), 1.0);
}

TEST(StationAirtime, MatchesClosedForm) {
  Rng rng(7);
  for (int t = 0; t < 500; ++t) {
    const int n = 1 + t % 5;
    const auto rates = random_rates(rng, n);
    const double a = 0.01 + 0.99 * rng.uniform();
    for (int i = 0; i < n; ++i) {
      const auto si = static_cast<std::size_t>(i);
      const double closed = station_airtime_closed_form(rates, si, a);
      EXPECT_NEAR(station_airtime(rates, si, a), closed, 1e-10 * std::max(closed, 1e-300));
      // 1 - P_coll,i = P_idle (1 + x_i)
      const auto p = slot_probabilities(rates);
      EXPECT_NEAR(1.0 - p.collision(i), p.idle * (1.0 + rates.x()(i)), 1e-12);
    }
  }
}

TEST(StationAirtime, IncreasingInOwnOdds) {
  Rng rng(9);
  for (int t = 0; t < 200; ++t) {
    Vector x(3);
    for (int i = 0; i < 3; ++i) x(i) = 3.0 * rng.uniform();
    Vector y = x;
    y(0) += 1e-2 + rng.uniform();
    EXPECT_GT(station_airtime(AttemptRates::from_odds(y), 0, 0.1),
              station_airtime(AttemptRates::from_odds(x), 0, 0.1));
  }
}

TEST(FlowThroughput, WorkedExample) {
  const auto ap = testing::example_ap(1500.0);
  const MacParams mac(9.0, 100.0);
  const PatternDistribution pi(vec({1.0 / 3, 0.0, 1.0 / 3, 1.0 / 3}));
  const Vector s = flow_throughput(AttemptRates(vec({1.0})), 0, ap, pi, mac);
  EXPECT_NEAR(s(0), 1.0 * 15.0, 1e-12);
  for (int f = 1; f < 4; ++f) EXPECT_NEAR(s(f), 2.0 * 15.0, 1e-12);
}

TEST(FlowThroughput, PointMassAndZeroPayload) {
  const auto ap = testing::example_ap(1.0);
  const AttemptRates rates(vec({1.0}));
  const MacParams mac(1.0, 1.0);
  const Vector s = flow_throughput(rates, 0, ap, PatternDistribution::point_mass(4, 2), mac);
  EXPECT_EQ(s, Vector(vec({2, 2, 2, 0})));

  const StationSpec zero("ap", {"f1", "f2", "f3", "f4"}, testing::example_patterns(),
                         PayloadMatrix(Matrix::Zero(4, 4)));
  EXPECT_TRUE(flow_throughput(rates, 0, zero, PatternDistribution::uniform(4), mac).isZero());
}

TEST(FlowThroughput, ConstantPayloadReducesToStreamForm) {
  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    const auto v = testing::random_full_rank_patterns(rng, 3);
    const std::vector<double> bits{700.0, 1100.0, 3.0};
    const StationSpec s("ap", {"a", "b", "c"}, v, PayloadMatrix::per_flow(v.patterns(), bits));
    Vector raw(v.patterns());
    for (int k = 0; k < v.patterns(); ++k) raw(k) = rng.exponential();
    const PatternDistribution pi(raw / raw.sum());
    const AttemptRates rates(vec({0.3, 0.1}));
    const MacParams mac(9.0, 60.0);
    const Vector got = flow_throughput(rates, 0, s, pi, mac);
    const Vector streams = average_streams(v, pi);
    const double share = success_airtime(rates, 0, mac.a());
    for (int f = 0; f < 3; ++f) {
      EXPECT_DOUBLE_EQ(got(f), share * bits[static_cast<std::size_t>(f)] / mac.t_s() * streams(f));
    }
  }
}

TEST(FlowAirtimeMetrics, WorkedExample) {
  const auto ap = testing::example_ap();
  const PatternDistribution pi(vec({1.0 / 3, 0.0, 1.0 / 3, 1.0 / 3}));
  const auto m = flow_airtime_metrics(ap, pi, 1.0);
  const Vector single = vec({1, 2, 2, 2});
  const Vector fraction = vec({0.1429, 0.2857, 0.2857, 0.2857});
  for (int f = 0; f < 4; ++f) {
    EXPECT_NEAR(m.equivalent_single_stream(f), single(f), 1e-12);
    EXPECT_NEAR(m.stream_fraction(f), fraction(f), 1e-4);
    EXPECT_NEAR(m.txop_fraction(f), 2.0 / 3.0, 1e-12);
  }
}

TEST(FlowAirtimeMetrics, StreamFractionsNormalized) {
  Rng rng(17);
  for (int t = 0; t < 100; ++t) {
    const int flows = 1 + t % 4;
    const auto v = testing::random_full_rank_patterns(rng, flows);
    const StationSpec s("s", testing::flow_names("", flows), v, 1.0);
    Vector raw(v.patterns());
    for (int k = 0; k < v.patterns(); ++k) raw(k) = rng.exponential();
    const auto m = flow_airtime_metrics(s, PatternDistribution(raw / raw.sum()), rng.uniform());
    EXPECT_NEAR(m.stream_fraction.sum(), 1.0, 1e-12);
    EXPECT_GE(m.txop_fraction.minCoeff(), 0.0);
    EXPECT_LE(m.txop_fraction.maxCoeff(), 1.0 + 1e-12);
  }
}

}  // namespace
}  // namespace pfmimo

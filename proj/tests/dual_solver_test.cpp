#include "scenarios.hpp"

#include <pfmimo/error.hpp>
#include <pfmimo/solver.hpp>

#include <gtest/gtest.h>

namespace pfmimo {
namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

const Vector kExamplePi = vec({1.0 / 3, 0.0, 1.0 / 3, 1.0 / 3});

TEST(DualSubgradient, WorkedExample) {
  const auto sol = dual_subgradient(testing::example_ap(), SolverConfig{});
  EXPECT_NEAR(sol.nu, 4.0, 1e-5);
  EXPECT_LE((sol.theta - vec({0, 1.5, 0, 0})).lpNorm<Eigen::Infinity>(), 1e-5);
  EXPECT_LE((sol.distribution.pi() - kExamplePi).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(DualSubgradient, SinglePattern) {
  const StationSpec s("s", {"a", "b", "c"}, PatternMatrix{{1, 1, 2}}, 10.0);
  const auto sol = dual_subgradient(s, SolverConfig{});
  EXPECT_EQ(sol.distribution.pi(), vec({1.0}));
  EXPECT_EQ(sol.theta, vec({0.0}));
}

TEST(DualSubgradient, IdentityPatterns) {
  const StationSpec s("s", {"a", "b", "c"}, PatternMatrix::identity(3), 10.0);
  const auto sol = dual_subgradient(s, SolverConfig{});
  EXPECT_NEAR(sol.nu, 3.0, 1e-6);
  EXPECT_LE(sol.theta.lpNorm<Eigen::Infinity>(), 1e-6);
  EXPECT_LE((sol.distribution.pi() - Vector::Constant(3, 1.0 / 3)).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(DualSubgradient, NonConvergenceReported) {
  SolverConfig cfg;
  cfg.max_iters = 3;
  try {
    dual_subgradient(testing::example_ap(), cfg);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.last_residual(), 0.0);
  }
}

TEST(DualSubgradient, AgreesWithPrimal) {
  Rng rng(43);
  for (int t = 0; t < 40; ++t) {
    for (const auto& s : testing::random_scenario(rng)) {
      const SolverConfig cfg;
      const Matrix g = s.gains();
      const Vector w = Vector::Ones(s.flow_count());
      const auto primal = solve_pattern_distribution(s, cfg);
      const auto dual = dual_subgradient(s, cfg);
      EXPECT_TRUE(kkt_report(s, dual.distribution, w, dual.nu, dual.theta).satisfied(cfg.kkt_tol));
      EXPECT_GE(dual.theta.minCoeff(), 0.0);
      EXPECT_GE(dual.nu, 0.0);
      // gains are compared on the unit-max scale the solvers work in
      const double scale = g.maxCoeff();
      EXPECT_LE((g.transpose() * (primal.pi() - dual.distribution.pi())).lpNorm<Eigen::Infinity>() / scale,
                1e-4);
      EXPECT_NEAR(pattern_objective(g, w, primal.pi()), pattern_objective(g, w, dual.distribution.pi()),
                  1e-6);
    }
  }
}

TEST(RecoverPi, WorkedExample) {
  const auto r = recover_pi(testing::example_patterns(), 4.0, vec({0, 1.5, 0, 0}), SolverConfig{});
  EXPECT_TRUE(r.unique);
  EXPECT_LE((r.distribution.pi() - kExamplePi).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(RecoverPi, IdentityGivesUniform) {
  const auto r = recover_pi(PatternMatrix::identity(5), 5.0, Vector::Zero(5), SolverConfig{});
  EXPECT_LE((r.distribution.pi() - Vector::Constant(5, 0.2)).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(RecoverPi, SinglePattern) {
  const auto r = recover_pi(PatternMatrix{{2, 1}}, 2.0, vec({0.0}), SolverConfig{});
  EXPECT_EQ(r.distribution.pi(), vec({1.0}));
}

TEST(RecoverPi, RankDeficientRejected) {
  EXPECT_THROW(recover_pi(PatternMatrix{{1, 2}, {2, 4}}, 2.0, vec({0, 0}), SolverConfig{}),
               UnsupportedStructureError);
}

TEST(RecoverPi, InconsistentMultipliersRejected) {
  // nu too small for the rate targets to fit on the simplex
  EXPECT_THROW(recover_pi(PatternMatrix::identity(2), 0.5, vec({0, 0}), SolverConfig{}),
               InconsistentMultipliersError);
  // negative (nu - theta) entry
  EXPECT_THROW(recover_pi(PatternMatrix::identity(2), 1.0, vec({2.0, 0.0}), SolverConfig{}),
               InconsistentMultipliersError);
}

TEST(RecoverPi, NonUniqueReturnsMinimumNorm) {
  // pattern 3 is the average of patterns 1 and 2: pi = (p, p, 1 - 2p) all
  // give stream rates (1, 1) and the minimum-norm member is p = 1/3
  const PatternMatrix v{{2, 0}, {0, 2}, {1, 1}};
  const auto r = recover_pi(v, 2.0, vec({0, 0, 0}), SolverConfig{});
  EXPECT_FALSE(r.unique);
  EXPECT_LE((r.distribution.pi() - Vector::Constant(3, 1.0 / 3)).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(RecoverPi, RoundTripFromPrimalOptimum) {
  Rng rng(47);
  for (int t = 0; t < 40; ++t) {
    for (const auto& s : testing::random_scenario(rng)) {
      const SolverConfig cfg;
      const Matrix g = s.gains();
      const Vector w = Vector::Ones(s.flow_count());
      const auto primal = solve_pattern_distribution(s, cfg);
      const auto rep = kkt_report(s, primal, w, cfg.simplex_tol);
      const auto back = recover_pi(s, rep.nu, rep.theta, cfg);
      EXPECT_NEAR(pattern_objective(g, w, back.distribution.pi()), pattern_objective(g, w, primal.pi()), 1e-6);
    }
  }
}

}  // namespace
}  // namespace pfmimo

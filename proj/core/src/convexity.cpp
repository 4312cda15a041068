#include "pfmimo/error.hpp"
#include "pfmimo/rng.hpp"
#include "pfmimo/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pfmimo {

namespace {

// log X(e^x~) with X = a + prod (1 + e^x~_k) - 1
double log_big_x(const Vector& log_odds, double a) {
  double log_prod = 0.0;
  for (Eigen::Index k = 0; k < log_odds.size(); ++k) log_prod += std::log1p(std::exp(log_odds(k)));
  return std::log(a + std::expm1(log_prod));
}

Vector random_simplex_point(Rng& rng, int size) {
  Vector p(size);
  for (int k = 0; k < size; ++k) p(k) = rng.exponential();
  return p / p.sum();
}

}  // namespace

double check_log_convexity(const StationSpec& station, int n_stations, double a, int trials,
                           std::uint64_t seed) {
  if (trials < 1) throw DomainError("trials must be at least 1");
  if (n_stations < 1) throw DomainError("at least one station required");
  if (!(a > 0.0 && a <= 1.0)) throw DomainError("ratio a must lie in (0, 1]");

  const Matrix gains = station.gains();
  Rng rng(seed);
  double worst = -std::numeric_limits<double>::infinity();

  auto g = [&](const Vector& log_odds, const Vector& pi, int f) {
    const double stream_bits = gains.col(f).dot(pi);
    return -log_odds(0) - std::log(stream_bits) + log_big_x(log_odds, a);
  };

  for (int t = 0; t < trials; ++t) {
    Vector x1(n_stations);
    Vector x2(n_stations);
    for (int i = 0; i < n_stations; ++i) {
      x1(i) = -6.0 + 12.0 * rng.uniform();
      x2(i) = -6.0 + 12.0 * rng.uniform();
    }
    const Vector p1 = random_simplex_point(rng, station.pattern_count());
    const Vector p2 = random_simplex_point(rng, station.pattern_count());
    const Vector xm = 0.5 * (x1 + x2);
    const Vector pm = 0.5 * (p1 + p2);
    for (int f = 0; f < station.flow_count(); ++f) {
      if (!(gains.col(f).maxCoeff() > 0.0)) continue;
      const double gap = g(xm, pm, f) - 0.5 * (g(x1, p1, f) + g(x2, p2, f));
      worst = std::max(worst, gap);
    }
  }
  return worst;
}

}  // namespace pfmimo

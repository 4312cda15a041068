#include "pfmimo/simplex.hpp"

#include <algorithm>
#include <functional>
#include <vector>

namespace pfmimo {

Vector project_onto_simplex(const Vector& v) {
  const Eigen::Index n = v.size();
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());

  double running = 0.0;
  double shift = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    running += sorted[j];
    const double candidate = (running - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) shift = candidate;
  }
  return (v.array() - shift).cwiseMax(0.0).matrix();
}

}  // namespace pfmimo

#pragma once

#include "pfmimo/types.hpp"

namespace pfmimo {

/// Euclidean projection of v onto the probability simplex
/// {p : p >= 0, sum p = 1}. Sort-based, O(K log K).
Vector project_onto_simplex(const Vector& v);

}  // namespace pfmimo

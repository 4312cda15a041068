#pragma once

// Small dense linear algebra used by the pattern-recovery step. Matrices here
// are at most a few dozen rows, so everything is plain O(n^3) elimination.

#include "pfmimo/types.hpp"

#include <optional>
#include <vector>

namespace pfmimo::linalg {

/// Solves A z = b by Gaussian elimination with partial pivoting.
/// Returns nullopt when a pivot falls below `pivot_tol` (relative to the
/// largest entry of A).
std::optional<Vector> gauss_solve(Matrix a, Vector b, double pivot_tol = 1e-12);

/// Same elimination for several right-hand sides (the columns of b).
std::optional<Matrix> gauss_solve_many(Matrix a, Matrix b, double pivot_tol = 1e-12);

/// Indices of a maximal linearly independent set of rows of A, chosen
/// greedily in row order. Its size is the rank of A.
std::vector<int> independent_rows(const Matrix& a, double tol = 1e-10);

int rank(const Matrix& a, double tol = 1e-10);

/// Non-negative least squares, min |M z - c| s.t. z >= 0 (Lawson-Hanson).
Vector nnls(const Matrix& m, const Vector& c, int max_iter = 200);

/// Minimum-norm non-negative solution of E z = b, i.e. the projection of the
/// origin onto {z >= 0 : E z = b}. The system may be overdetermined as long
/// as it is consistent. Returns nullopt if the residual exceeds `tol`
/// (relative to |b|_inf).
std::optional<Vector> min_norm_nonnegative(const Matrix& e, const Vector& b, double tol = 1e-10);

}  // namespace pfmimo::linalg

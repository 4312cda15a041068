#include "pfmimo/linalg.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <vector>

namespace pfmimo::linalg {

std::optional<Matrix> gauss_solve_many(Matrix a, Matrix b, double pivot_tol) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.rows() != n) return std::nullopt;
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);

  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index pivot = col;
    a.col(col).tail(n - col).cwiseAbs().maxCoeff(&pivot);
    pivot += col;
    if (std::abs(a(pivot, col)) <= pivot_tol * scale) return std::nullopt;
    if (pivot != col) {
      a.row(pivot).swap(a.row(col));
      b.row(pivot).swap(b.row(col));
    }
    for (Eigen::Index r = col + 1; r < n; ++r) {
      const double factor = a(r, col) / a(col, col);
      if (factor == 0.0) continue;
      a.row(r).tail(n - col) -= factor * a.row(col).tail(n - col);
      b.row(r) -= factor * b.row(col);
    }
  }

  Matrix z(n, b.cols());
  for (Eigen::Index r = n - 1; r >= 0; --r) {
    Eigen::RowVectorXd acc = b.row(r);
    for (Eigen::Index c = r + 1; c < n; ++c) acc -= a(r, c) * z.row(c);
    z.row(r) = acc / a(r, r);
  }
  return z;
}

std::optional<Vector> gauss_solve(Matrix a, Vector b, double pivot_tol) {
  auto z = gauss_solve_many(std::move(a), Matrix(std::move(b)), pivot_tol);
  if (!z) return std::nullopt;
  return Vector(z->col(0));
}

std::vector<int> independent_rows(const Matrix& a, double tol) {
  // Orthogonalize each row against the accepted ones (modified Gram-Schmidt);
  // a row is kept when its residual is non-negligible.
  std::vector<int> kept;
  std::vector<Vector> basis;
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    Vector v = a.row(r).transpose();
    for (const auto& q : basis) v -= q.dot(v) * q;
    const double norm = v.norm();
    if (norm > tol * scale) {
      basis.push_back(v / norm);
      kept.push_back(static_cast<int>(r));
      if (static_cast<Eigen::Index>(kept.size()) == a.cols()) break;
    }
  }
  return kept;
}

int rank(const Matrix& a, double tol) { return static_cast<int>(independent_rows(a, tol).size()); }

Vector nnls(const Matrix& m, const Vector& c, int max_iter) {
  // Lawson-Hanson active set method.
  const Eigen::Index n = m.cols();
  Vector z = Vector::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 1e-13 * std::max(1.0, m.cwiseAbs().maxCoeff()) * std::max(1.0, c.norm());

  auto solve_passive = [&]() {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    }
    Matrix sub(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
    const Vector sol = sub.colPivHouseholderQr().solve(c);
    Vector full = Vector::Zero(n);
    for (std::size_t j = 0; j < idx.size(); ++j) full(idx[j]) = sol(static_cast<Eigen::Index>(j));
    return full;
  };

  for (int outer = 0; outer < max_iter; ++outer) {
    const Vector w = m.transpose() * (c - m * z);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;

    for (int inner = 0; inner < max_iter; ++inner) {
      const Vector s = solve_passive();
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0) feasible = false;
      }
      if (feasible) {
        z = s;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0) {
          alpha = std::min(alpha, z(j) / (z(j) - s(j)));
        }
      }
      z += alpha * (s - z);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 1e-15) {
          passive[static_cast<std::size_t>(j)] = false;
          z(j) = 0.0;
        }
      }
    }
  }
  return z;
}

std::optional<Vector> min_norm_nonnegative(const Matrix& e, const Vector& b, double tol) {
  // Tikhonov-regularized NNLS approximates the projection of the origin onto
  // {z >= 0 : E z = b}. The ridge must stay well above the NNLS stopping
  // tolerance or it never pulls the solution toward the minimum norm. The
  // support it finds is then re-solved exactly, shrinking it while the exact
  // minimum-norm solution on the support has negative entries.
  const Eigen::Index m = e.rows();
  const Eigen::Index n = e.cols();
  const double scale = std::max(1.0, e.cwiseAbs().maxCoeff());
  const double ridge = 1e-4 * scale;
  Matrix stacked(m + n, n);
  stacked.topRows(m) = e;
  stacked.bottomRows(n) = ridge * Matrix::Identity(n, n);
  Vector rhs = Vector::Zero(m + n);
  rhs.head(m) = b;
  Vector z = nnls(stacked, rhs, static_cast<int>(3 * n + 10));

  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (z(j) > 0.0) support.push_back(j);
  }
  while (!support.empty()) {
    Matrix sub(m, static_cast<Eigen::Index>(support.size()));
    for (std::size_t j = 0; j < support.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = e.col(support[j]);
    const Vector exact = sub.completeOrthogonalDecomposition().solve(b);
    if ((exact.array() >= 0.0).all()) {
      z.setZero();
      for (std::size_t j = 0; j < support.size(); ++j) z(support[j]) = exact(static_cast<Eigen::Index>(j));
      break;
    }
    std::vector<Eigen::Index> kept;
    for (std::size_t j = 0; j < support.size(); ++j) {
      if (exact(static_cast<Eigen::Index>(j)) > 0.0) kept.push_back(support[j]);
    }
    support.swap(kept);
  }

  if ((e * z - b).lpNorm<Eigen::Infinity>() <= tol * std::max(1.0, b.lpNorm<Eigen::Infinity>())) {
    return z;
  }
  return std::nullopt;
}

}  // namespace pfmimo::linalg

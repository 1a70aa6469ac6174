#pragma once

#include "adalista/core.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace testutil {

using adalista::Dictionary;
using adalista::Index;
using adalista::Matrix;
using adalista::Vector;

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

inline Vector gaussian_vec(Index n, std::mt19937_64& rng) { return gaussian(n, 1, rng).col(0); }

inline Dictionary unit_dictionary(Index n, Index m, std::mt19937_64& rng) {
  Matrix d = gaussian(n, m, rng);
  for (Index j = 0; j < m; ++j) d.col(j) /= d.col(j).norm();
  return Dictionary(d, true);
}

inline Vector sparse_vec(Index m, Index s, std::mt19937_64& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  std::normal_distribution<double> n(0.0, 1.0);
  Vector x = Vector::Zero(m);
  for (Index i = 0; i < s; ++i) x[idx[static_cast<std::size_t>(i)]] = n(rng);
  return x;
}

inline double lasso(const Vector& y, const Matrix& D, const Vector& x, double lambda) {
  return 0.5 * (y - D * x).squaredNorm() + lambda * x.lpNorm<1>();
}

// Cyclic coordinate descent for the Lasso, run until the objective is stable.
inline Vector coordinate_descent(const Vector& y, const Matrix& D, double lambda, int max_sweeps = 200000) {
  const Index m = D.cols();
  Vector x = Vector::Zero(m);
  Vector r = y;
  double prev = lasso(y, D, x, lambda);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (Index j = 0; j < m; ++j) {
      const double nj = D.col(j).squaredNorm();
      if (nj == 0.0) continue;
      const double rho = D.col(j).dot(r) + nj * x[j];
      const double xj = std::copysign(std::max(std::abs(rho) - lambda, 0.0), rho) / nj;
      r -= (xj - x[j]) * D.col(j);
      x[j] = xj;
    }
    const double obj = lasso(y, D, x, lambda);
    if (std::abs(prev - obj) < 1e-15 * std::max(1.0, obj)) break;
    prev = obj;
  }
  return x;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

} // namespace testutil

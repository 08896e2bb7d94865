#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <spdlog/spdlog.h>

#include "predvar/model.hpp"

namespace testing {

using predvar::Matrix;
using predvar::Vector;

inline const bool kQuietLogs = (spdlog::set_level(spdlog::level::err), true);

inline Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

inline Matrix random_symmetric(std::mt19937_64& rng, Eigen::Index n) {
  const Matrix a = gaussian(rng, n, n);
  return 0.5 * (a + a.transpose());
}

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double floor = 0.2) {
  const Matrix a = gaussian(rng, n, n);
  return a * a.transpose() / static_cast<double>(n) + floor * Matrix::Identity(n, n);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double cond2(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& sv = svd.singularValues();
  return sv(0) / sv(sv.size() - 1);
}

/// Stable lag matrices: random draws shrunk until the companion radius is below `radius`.
inline std::vector<Matrix> stable_coefs(std::mt19937_64& rng, int ell, int s, double radius) {
  std::vector<Matrix> b;
  for (int j = 0; j < s; ++j) b.push_back(gaussian(rng, ell, ell) / (ell * (j + 1)));
  double rho = predvar::companion_spectral_radius(b);
  while (rho >= radius) {
    for (Matrix& x : b) x *= 0.9;
    rho = predvar::companion_spectral_radius(b);
  }
  return b;
}

/// Random canonical model with well-conditioned [P Pbar] and generic noise covariances.
inline predvar::PredVarModel random_model(std::mt19937_64& rng, int p, int ell, int s) {
  Matrix full;
  do {
    full = gaussian(rng, p, p);
  } while (cond2(full) > 20.0);
  return predvar::make_model(full.leftCols(ell), full.rightCols(p - ell), stable_coefs(rng, ell, s, 0.8),
                             random_spd(rng, ell), random_spd(rng, p - ell), gaussian(rng, p, 1).col(0));
}

/// Number of eigenvalues of symmetric a below x, from the signs of the LDL' pivots of a - xI.
inline int count_below(const Matrix& a, double x) {
  Matrix m = a - x * Matrix::Identity(a.rows(), a.cols());
  const Eigen::Index n = m.rows();
  int negatives = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    double pivot = m(k, k);
    if (pivot == 0.0) pivot = -1e-300;
    if (pivot < 0.0) ++negatives;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double f = m(i, k) / pivot;
      for (Eigen::Index j = k + 1; j < n; ++j) m(i, j) -= f * m(k, j);
    }
  }
  return negatives;
}

/// Eigenvalues of a symmetric matrix by bisection on the inertia count, descending.
inline Vector bisection_eigenvalues(const Matrix& a) {
  const Eigen::Index n = a.rows();
  double radius = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) radius = std::max(radius, a.row(i).cwiseAbs().sum());
  Vector out(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    // k-th largest = (n - k)-th smallest: smallest x with count_below(x) >= n - k.
    double lo = -radius - 1.0, hi = radius + 1.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (count_below(a, mid) >= n - k) hi = mid; else lo = mid;
    }
    out(k) = 0.5 * (lo + hi);
  }
  return out;
}

}  // namespace testing

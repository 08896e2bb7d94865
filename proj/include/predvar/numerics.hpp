#pragma once

#include <Eigen/Dense>

#include "predvar/error.hpp"

namespace predvar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Observations stacked row-wise: rows are time steps, columns are variables.
using TimeSeriesMatrix = Matrix;

namespace numerics {

/// Relative threshold for every rank decision made in this module.
inline constexpr double kRankTol = 1e-12;

/**
 * Eigendecomposition of a symmetric matrix.
 *
 * Eigenvalues are sorted non-increasing (stable with respect to the backend
 * order for exact ties) and every eigenvector has its largest-magnitude entry
 * non-negative, lowest index winning ties.  This makes results reproducible
 * regardless of the solver used underneath.
 */
struct SymEvd {
  Vector eigenvalues;
  Matrix eigenvectors;
};

SymEvd sym_evd(const Matrix& a);

/// Minimizer of ||y - x b||_F via Householder QR of x.  Throws
/// RankDeficientDesign when x is numerically rank deficient.
Matrix lstsq(const Matrix& x, const Matrix& y);

/// Orthogonal projector x (x'x)^-1 x' onto the column space of x.
Matrix projector(const Matrix& x);

/// Orthonormal basis (thin Q factor) of a full-column-rank matrix.
Matrix orthonormal_basis(const Matrix& x, double rank_tol = kRankTol);

/// Ratio of extreme eigenvalues of x'x, computed from the R factor of x.
double gram_condition(const Matrix& x);

/// Symmetric (x + x')/2.
Matrix symmetrize(const Matrix& x);

double max_abs(const Matrix& x);

bool all_finite(const Matrix& x);

void require_finite(const Matrix& x, const char* what);

/// Flips signs so each column's largest-magnitude entry is non-negative.
void canonical_signs(Matrix& columns);

/// Symmetric square root of a PSD matrix, negative eigenvalues clipped.
Matrix psd_sqrt(const Matrix& a);

/// Kronecker product a (x) b.
Matrix kron(const Matrix& a, const Matrix& b);

}  // namespace numerics
}  // namespace predvar

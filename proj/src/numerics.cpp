#include "predvar/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

namespace predvar {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonSquare: return "NonSquare";
    case ErrorKind::NonSymmetric: return "NonSymmetric";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InsufficientHistory: return "InsufficientHistory";
    case ErrorKind::InsufficientRows: return "InsufficientRows";
    case ErrorKind::UnstableDynamics: return "UnstableDynamics";
    case ErrorKind::NotPsd: return "NotPsd";
    case ErrorKind::SingularCrossProduct: return "SingularCrossProduct";
    case ErrorKind::SingularCovariance: return "SingularCovariance";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::EllExceedsRank: return "EllExceedsRank";
    case ErrorKind::SingularInformation: return "SingularInformation";
    case ErrorKind::PenaltyDomain: return "PenaltyDomain";
    case ErrorKind::AllCellsFailed: return "AllCellsFailed";
    case ErrorKind::RankDeficientBasis: return "RankDeficientBasis";
    case ErrorKind::NonFiniteTrajectory: return "NonFiniteTrajectory";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::CsvParse: return "CsvParse";
    case ErrorKind::InvalidFlags: return "InvalidFlags";
  }
  return "Unknown";
}

namespace numerics {

double max_abs(const Matrix& x) {
  return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
}

bool all_finite(const Matrix& x) {
  return x.size() == 0 || x.allFinite();
}

void require_finite(const Matrix& x, const char* what) {
  if (!all_finite(x)) {
    throw Error(ErrorKind::NonFiniteInput, std::string(what) + " contains NaN or Inf");
  }
}

Matrix symmetrize(const Matrix& x) {
  return 0.5 * (x + x.transpose());
}

void canonical_signs(Matrix& columns) {
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < columns.rows(); ++i) {
      const double a = std::abs(columns(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (columns.rows() > 0 && columns(arg, j) < 0.0) columns.col(j) *= -1.0;
  }
}

SymEvd sym_evd(const Matrix& a) {
  if (a.rows() != a.cols()) {
    std::ostringstream msg;
    msg << "expected a square matrix, got " << a.rows() << "x" << a.cols();
    throw Error(ErrorKind::NonSquare, msg.str());
  }
  require_finite(a, "eigen-decomposition input");
  const Eigen::Index n = a.rows();
  if (n == 0) return {Vector(0), Matrix(0, 0)};

  const double scale = std::max(1.0, max_abs(a));
  const double asym = max_abs(a - a.transpose());
  if (asym > 1e-8 * scale) {
    std::ostringstream msg;
    msg << "asymmetry " << asym << " exceeds 1e-8 relative";
    throw Error(ErrorKind::NonSymmetric, msg.str());
  }

  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(a));
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NonFiniteInput, "symmetric eigen-solver failed to converge");
  }

  // Exact ties keep the backend order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return solver.eigenvalues()(i) > solver.eigenvalues()(j);
  });

  SymEvd out{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues(k) = solver.eigenvalues()(order[static_cast<std::size_t>(k)]);
    out.eigenvectors.col(k) = solver.eigenvectors().col(order[static_cast<std::size_t>(k)]);
  }
  canonical_signs(out.eigenvectors);
  return out;
}

namespace {

// Condition of x'x equals the squared condition of the triangular factor.
double triangular_gram_condition(const Matrix& r) {
  if (r.cols() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(r);
  const Vector& sv = svd.singularValues();
  const double hi = sv(0);
  const double lo = sv(sv.size() - 1);
  if (hi == 0.0) return std::numeric_limits<double>::infinity();
  const double ratio = lo / hi;
  return ratio == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / (ratio * ratio);
}

Matrix upper_factor(const Eigen::HouseholderQR<Matrix>& qr, Eigen::Index k) {
  return qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
}

void require_full_rank(const Matrix& x, const Eigen::HouseholderQR<Matrix>& qr, double rank_tol,
                       const char* what) {
  if (x.rows() < x.cols()) {
    std::ostringstream msg;
    msg << what << ": " << x.rows() << " rows cannot support " << x.cols() << " columns";
    throw Error(ErrorKind::RankDeficientDesign, msg.str());
  }
  const double cond = triangular_gram_condition(upper_factor(qr, x.cols()));
  if (!(cond * rank_tol < 1.0)) {
    std::ostringstream msg;
    msg << what << ": condition estimate of x'x is " << cond << " (limit " << 1.0 / rank_tol
        << ")";
    throw Error(ErrorKind::RankDeficientDesign, msg.str());
  }
}

}  // namespace

double gram_condition(const Matrix& x) {
  if (x.cols() == 0) return 1.0;
  if (x.rows() < x.cols()) return std::numeric_limits<double>::infinity();
  Eigen::HouseholderQR<Matrix> qr(x);
  return triangular_gram_condition(upper_factor(qr, x.cols()));
}

Matrix lstsq(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) {
    std::ostringstream msg;
    msg << "design has " << x.rows() << " rows, response has " << y.rows();
    throw Error(ErrorKind::DimensionMismatch, msg.str());
  }
  require_finite(x, "design");
  require_finite(y, "response");
  Eigen::HouseholderQR<Matrix> qr(x);
  require_full_rank(x, qr, kRankTol, "least squares");
  return qr.solve(y);
}

Matrix orthonormal_basis(const Matrix& x, double rank_tol) {
  require_finite(x, "basis input");
  Eigen::HouseholderQR<Matrix> qr(x);
  require_full_rank(x, qr, rank_tol, "orthonormal basis");
  return qr.householderQ() * Matrix::Identity(x.rows(), x.cols());
}

Matrix projector(const Matrix& x) {
  const Matrix q = orthonormal_basis(x);
  return symmetrize(q * q.transpose());
}

Matrix psd_sqrt(const Matrix& a) {
  const SymEvd evd = sym_evd(a);
  const Vector root = evd.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  return evd.eigenvectors * root.asDiagonal() * evd.eigenvectors.transpose();
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace numerics
}  // namespace predvar

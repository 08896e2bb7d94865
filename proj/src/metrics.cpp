#include "predvar/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

namespace predvar::metrics {

namespace {

Matrix span_basis(const Matrix& x, const char* what) {
  if (x.cols() < 1) throw Error(ErrorKind::RankDeficientBasis, std::string(what) + " has no columns");
  numerics::require_finite(x, what);
  try {
    return numerics::orthonormal_basis(x, 1e-20);
  } catch (const Error&) {
    throw Error(ErrorKind::RankDeficientBasis, std::string(what) + " is not of full column rank");
  }
}

void same_ambient(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    std::ostringstream msg;
    msg << "bases live in R^" << a.rows() << " and R^" << b.rows();
    throw Error(ErrorKind::DimensionMismatch, msg.str());
  }
}

}  // namespace

double d_distance(const Matrix& a, const Matrix& b) {
  same_ambient(a, b);
  Matrix q1 = span_basis(a, "first basis");
  Matrix q2 = span_basis(b, "second basis");
  if (q1.cols() < q2.cols()) std::swap(q1, q2);
  const double l1 = static_cast<double>(q1.cols());
  const double l2 = static_cast<double>(q2.cols());
  // 1 - tr(Pi1 Pi2)/l1 written as a sum of non-negative terms to avoid cancellation.
  const Matrix outside = q2 - q1 * (q1.transpose() * q2);
  const double gap = ((l1 - l2) + outside.squaredNorm()) / l1;
  return std::sqrt(std::clamp(gap, 0.0, 1.0));
}

Vector principal_cosines(const Matrix& a, const Matrix& b) {
  same_ambient(a, b);
  const Matrix q1 = span_basis(a, "first basis");
  const Matrix q2 = span_basis(b, "second basis");
  Eigen::JacobiSVD<Matrix> svd(q1.transpose() * q2);
  return svd.singularValues().cwiseMin(1.0);
}

double avg_correlation(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream msg;
    msg << "shapes " << a.rows() << "x" << a.cols() << " and " << b.rows() << "x" << b.cols()
        << " differ";
    throw Error(ErrorKind::DimensionMismatch, msg.str());
  }
  if (a.cols() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const Vector x = a.col(j).array() - a.col(j).mean();
    const Vector y = b.col(j).array() - b.col(j).mean();
    const double nx = x.norm();
    const double ny = y.norm();
    if (nx <= 1e-12 * a.col(j).norm() || ny <= 1e-12 * b.col(j).norm()) {
      spdlog::warn("column {} is constant; it contributes 0 to the average correlation", j);
      continue;
    }
    total += std::min(1.0, std::abs(x.dot(y)) / (nx * ny));
  }
  return total / static_cast<double>(a.cols());
}

}  // namespace predvar::metrics

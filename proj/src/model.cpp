#include "predvar/model.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace predvar {

namespace {

void require_columns(const PredVarModel& m, const TimeSeriesMatrix& y) {
  if (y.cols() != m.p) {
    std::ostringstream msg;
    msg << "model has p = " << m.p << " but data has " << y.cols() << " columns";
    throw Error(ErrorKind::DimensionMismatch, msg.str());
  }
}

void require_history(const PredVarModel& m, const TimeSeriesMatrix& y) {
  if (y.rows() < m.s + 1) {
    std::ostringstream msg;
    msg << "need at least s + 1 = " << m.s + 1 << " rows, got " << y.rows();
    throw Error(ErrorKind::InsufficientHistory, msg.str());
  }
}

Matrix centered(const Vector& mean, const TimeSeriesMatrix& y) {
  return y.rowwise() - mean.transpose();
}

void require_psd(const Matrix& a, const char* what) {
  if (a.size() == 0) return;
  if (numerics::max_abs(a - a.transpose()) > 1e-10 * std::max(1.0, numerics::max_abs(a))) {
    throw Error(ErrorKind::NotPsd, std::string(what) + " is not symmetric");
  }
  const numerics::SymEvd evd = numerics::sym_evd(a);
  const double floor = -1e-10 * std::max(1.0, std::abs(evd.eigenvalues(0)));
  if (evd.eigenvalues(evd.eigenvalues.size() - 1) < floor) {
    std::ostringstream msg;
    msg << what << " has negative eigenvalue " << evd.eigenvalues(evd.eigenvalues.size() - 1);
    throw Error(ErrorKind::NotPsd, msg.str());
  }
}

// ln det and inverse of a symmetric positive definite matrix.
struct SpdInverse {
  double log_det;
  Matrix inverse;
};

SpdInverse spd_inverse(const Matrix& a, const char* what) {
  Eigen::LLT<Matrix> llt(numerics::symmetrize(a));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularCovariance, std::string(what) + " is not positive definite");
  }
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return {log_det, llt.solve(Matrix::Identity(a.rows(), a.cols()))};
}

// Pseudo-inverse of a PSD matrix; eigenvalues below 1e-10 of the largest are dropped.
Matrix psd_pinv(const Matrix& a) {
  if (a.size() == 0) return a;
  const numerics::SymEvd evd = numerics::sym_evd(a);
  const double cut = 1e-10 * std::max(evd.eigenvalues(0), 0.0);
  Vector inv = Vector::Zero(evd.eigenvalues.size());
  for (Eigen::Index i = 0; i < inv.size(); ++i) {
    if (evd.eigenvalues(i) > cut && evd.eigenvalues(i) > 0.0) inv(i) = 1.0 / evd.eigenvalues(i);
  }
  return evd.eigenvectors * inv.asDiagonal() * evd.eigenvectors.transpose();
}

}  // namespace

Matrix NormalizationTransform::to_normalized(const TimeSeriesMatrix& y) const {
  if (y.cols() != dim()) {
    throw Error(ErrorKind::DimensionMismatch, "data width does not match the normalization");
  }
  const Vector inv_sqrt = eigenvalues.cwiseSqrt().cwiseInverse();
  return centered(mean, y) * basis * inv_sqrt.asDiagonal();
}

NormalizationTransform NormalizationTransform::identity(int p) {
  NormalizationTransform t;
  t.basis = Matrix::Identity(p, p);
  t.eigenvalues = Vector::Ones(p);
  t.null_basis = Matrix(p, 0);
  t.mean = Vector::Zero(p);
  return t;
}

void validate(const PredVarModel& m) {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); };
  if (m.s < 1) fail("VAR order s must be at least 1");
  if (m.ell < 1 || m.ell > m.r || m.r > m.p) fail("need 1 <= ell <= r <= p");
  const int stat = m.p - m.ell;
  if (m.mean.size() != m.p) fail("mean has wrong length");
  if (m.loadings.rows() != m.p || m.loadings.cols() != m.ell) fail("loadings must be p x ell");
  if (m.weights.rows() != m.p || m.weights.cols() != m.ell) fail("weights must be p x ell");
  if (m.static_loadings.rows() != m.p || m.static_loadings.cols() != stat)
    fail("static loadings must be p x (p - ell)");
  if (m.static_weights.rows() != m.p || m.static_weights.cols() != stat)
    fail("static weights must be p x (p - ell)");
  if (static_cast<int>(m.coefs.size()) != m.s) fail("expected s coefficient matrices");
  for (const Matrix& b : m.coefs) {
    if (b.rows() != m.ell || b.cols() != m.ell) fail("coefficients must be ell x ell");
  }
  if (m.latent_innovation_cov.rows() != m.ell || m.latent_innovation_cov.cols() != m.ell)
    fail("latent innovation covariance must be ell x ell");
  if (m.static_noise_cov.rows() != stat || m.static_noise_cov.cols() != stat)
    fail("static noise covariance must be (p - ell) x (p - ell)");
  if (m.innovation_cov.rows() != m.p || m.innovation_cov.cols() != m.p)
    fail("innovation covariance must be p x p");

  Matrix w(m.p, m.p), l(m.p, m.p);
  w << m.weights, m.static_weights;
  l << m.loadings, m.static_loadings;
  if (numerics::max_abs(w.transpose() * l - Matrix::Identity(m.p, m.p)) > 1e-6)
    fail("[R Rbar]'[P Pbar] differs from identity");
  if (numerics::max_abs(l * w.transpose() - Matrix::Identity(m.p, m.p)) > 1e-6)
    fail("P R' + Pbar Rbar' differs from identity");
  require_psd(m.latent_innovation_cov, "latent innovation covariance");
  require_psd(m.innovation_cov, "innovation covariance");
}

PredVarModel make_model(const Matrix& loadings, const Matrix& static_loadings,
                        const std::vector<Matrix>& coefs, const Matrix& latent_innovation_cov,
                        const Matrix& static_noise_cov, const Vector& mean) {
  const auto p = loadings.rows();
  const auto ell = loadings.cols();
  if (static_loadings.rows() != p || static_loadings.cols() != p - ell) {
    throw Error(ErrorKind::DimensionMismatch, "static loadings must be p x (p - ell)");
  }
  Matrix full(p, p);
  full << loadings, static_loadings;
  Eigen::FullPivLU<Matrix> lu(full);
  if (!lu.isInvertible()) {
    throw Error(ErrorKind::SingularCrossProduct, "[P Pbar] is singular");
  }
  const Matrix dual = lu.inverse().transpose();

  PredVarModel m;
  m.p = static_cast<int>(p);
  m.ell = static_cast<int>(ell);
  m.s = static_cast<int>(coefs.size());
  m.r = m.p;
  m.mean = mean;
  m.loadings = loadings;
  m.static_loadings = static_loadings;
  m.weights = dual.leftCols(ell);
  m.static_weights = dual.rightCols(p - ell);
  m.coefs = coefs;
  m.latent_innovation_cov = latent_innovation_cov;
  m.static_noise_cov = static_noise_cov;
  m.innovation_cov = loadings * latent_innovation_cov * loadings.transpose() +
                     static_loadings * static_noise_cov * static_loadings.transpose();
  m.norm = NormalizationTransform::identity(m.p);
  m.norm.mean = mean;
  return m;
}

Matrix latent_scores(const PredVarModel& m, const TimeSeriesMatrix& y) {
  require_columns(m, y);
  return centered(m.mean, y) * m.weights;
}

Matrix static_noise(const PredVarModel& m, const TimeSeriesMatrix& y) {
  require_columns(m, y);
  return centered(m.mean, y) * m.static_weights;
}

Matrix predict_latent(const std::vector<Matrix>& coefs, const Matrix& scores) {
  const auto s = static_cast<Eigen::Index>(coefs.size());
  const Eigen::Index n = scores.rows() - s;
  if (n <= 0) {
    throw Error(ErrorKind::InsufficientHistory, "score history shorter than s + 1");
  }
  Matrix out = Matrix::Zero(n, scores.cols());
  for (Eigen::Index j = 1; j <= s; ++j) {
    out.noalias() += scores.middleRows(s - j, n) * coefs[static_cast<std::size_t>(j - 1)].transpose();
  }
  return out;
}

Prediction predict_one_step(const PredVarModel& m, const TimeSeriesMatrix& y_history) {
  require_columns(m, y_history);
  require_history(m, y_history);
  Prediction out;
  out.latent = predict_latent(m.coefs, latent_scores(m, y_history));
  out.observed = (out.latent * m.loadings.transpose()).rowwise() + m.mean.transpose();
  return out;
}

double companion_spectral_radius(const std::vector<Matrix>& coefs) {
  if (coefs.empty()) return 0.0;
  const auto ell = coefs.front().rows();
  const auto s = static_cast<Eigen::Index>(coefs.size());
  Matrix companion = Matrix::Zero(ell * s, ell * s);
  for (Eigen::Index j = 0; j < s; ++j) {
    companion.block(0, j * ell, ell, ell) = coefs[static_cast<std::size_t>(j)];
  }
  if (s > 1) companion.bottomLeftCorner(ell * (s - 1), ell * (s - 1)).setIdentity();
  Eigen::EigenSolver<Matrix> solver(companion, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Simulation simulate_with_latent(const PredVarModel& m, int n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "simulation length must be positive");
  require_psd(m.latent_innovation_cov, "latent innovation covariance");
  require_psd(m.static_noise_cov, "static noise covariance");
  const double radius = companion_spectral_radius(m.coefs);
  if (!(radius < 1.0)) {
    std::ostringstream msg;
    msg << "companion spectral radius " << radius << " is not below 1";
    throw Error(ErrorKind::UnstableDynamics, msg.str());
  }

  // Transients decay like radius^k; discard until they are below 1e-13.
  int burn_in = 100;
  if (radius > 0.0) {
    burn_in = std::clamp(static_cast<int>(std::ceil(-30.0 / std::log(radius))), 100, 200000);
  }

  const Matrix latent_root = m.latent_innovation_cov.size() ? numerics::psd_sqrt(m.latent_innovation_cov) : Matrix();
  const Matrix static_root = m.static_noise_cov.size() ? numerics::psd_sqrt(m.static_noise_cov) : Matrix();
  const int ell = m.ell;
  const int stat = m.p - m.ell;
  const int total = burn_in + n;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw = [&](int k) {
    Vector z(k);
    for (int i = 0; i < k; ++i) z(i) = gauss(rng);
    return z;
  };

  Matrix v = Matrix::Zero(total, ell);
  Matrix noise = Matrix::Zero(total, stat);
  for (int k = 0; k < total; ++k) {
    Vector vk = latent_root * draw(ell);
    for (int j = 1; j <= m.s && k - j >= 0; ++j) {
      vk.noalias() += m.coefs[static_cast<std::size_t>(j - 1)] * v.row(k - j).transpose();
    }
    v.row(k) = vk.transpose();
    if (stat > 0) noise.row(k) = (static_root * draw(stat)).transpose();
  }

  Simulation out;
  out.latent = v.bottomRows(n);
  out.y = out.latent * m.loadings.transpose() + noise.bottomRows(n) * m.static_loadings.transpose();
  out.y.rowwise() += m.mean.transpose();
  return out;
}

TimeSeriesMatrix simulate(const PredVarModel& m, int n, std::uint64_t seed) {
  return simulate_with_latent(m, n, seed).y;
}

RrvarView to_rrvar(const PredVarModel& m) {
  RrvarView view;
  view.lag_matrices.reserve(m.coefs.size());
  for (const Matrix& b : m.coefs) {
    view.lag_matrices.push_back(m.loadings * b * m.weights.transpose());
  }
  view.innovation_cov = m.innovation_cov;
  return view;
}

CanonicalRrvar canonicalize_rrvar(const Matrix& loadings, const std::vector<Matrix>& coefs,
                                  const Matrix& weights) {
  if (loadings.rows() != weights.rows() || loadings.cols() != weights.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "loadings and weights must have the same shape");
  }
  const Matrix cross = weights.transpose() * loadings;
  Eigen::JacobiSVD<Matrix> svd(cross);
  const Vector& sv = svd.singularValues();
  const double cond = sv.size() ? sv(0) / sv(sv.size() - 1) : 1.0;
  if (!(cond < 1e12)) {
    std::ostringstream msg;
    msg << "R'P has condition estimate " << cond;
    throw Error(ErrorKind::SingularCrossProduct, msg.str());
  }
  CanonicalRrvar out;
  out.loadings = loadings;
  out.coefs.reserve(coefs.size());
  for (const Matrix& b : coefs) out.coefs.push_back(b * cross);
  // R = R_acute (P_acute' R_acute)^-1, i.e. R' = cross^-1 R_acute'.
  out.weights = cross.partialPivLu().solve(weights.transpose()).transpose();
  return out;
}

namespace {

struct ResidualParts {
  Matrix residual_normalized;  // N x r
  Matrix latent_residual;      // N x ell
  Matrix static_part;          // N x (p - ell)
  Matrix innovation_cov_normalized;
  Eigen::Index n;
};

ResidualParts residual_parts(const PredVarModel& m, const TimeSeriesMatrix& y) {
  require_columns(m, y);
  require_history(m, y);
  const Matrix scores = latent_scores(m, y);
  const Matrix vhat = predict_latent(m.coefs, scores);
  const Eigen::Index n = y.rows() - m.s;
  const Matrix yc = centered(m.mean, y).bottomRows(n);
  const Matrix to_norm = m.norm.basis * m.norm.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal();

  ResidualParts out;
  out.n = n;
  out.residual_normalized = (yc - vhat * m.loadings.transpose()) * to_norm;
  out.latent_residual = scores.bottomRows(n) - vhat;
  out.static_part = yc * m.static_weights;
  out.innovation_cov_normalized = to_norm.transpose() * m.innovation_cov * to_norm;
  return out;
}

}  // namespace

double likelihood_objective(const PredVarModel& m, const TimeSeriesMatrix& y) {
  const ResidualParts parts = residual_parts(m, y);
  const SpdInverse inv = spd_inverse(parts.innovation_cov_normalized, "innovation covariance");
  const Matrix& e = parts.residual_normalized;
  const double quad = (e * inv.inverse).cwiseProduct(e).sum();
  return static_cast<double>(parts.n) * inv.log_det + quad;
}

double likelihood_objective_decomposed(const PredVarModel& m, const TimeSeriesMatrix& y) {
  const ResidualParts parts = residual_parts(m, y);
  const SpdInverse inv = spd_inverse(parts.innovation_cov_normalized, "innovation covariance");
  const SpdInverse latent = spd_inverse(m.latent_innovation_cov, "latent innovation covariance");
  const Matrix static_inv = psd_pinv(m.static_noise_cov);
  const double static_quad = (parts.static_part * static_inv).cwiseProduct(parts.static_part).sum();
  const double latent_quad =
      (parts.latent_residual * latent.inverse).cwiseProduct(parts.latent_residual).sum();
  return static_cast<double>(parts.n) * inv.log_det + static_quad + latent_quad;
}

double log_likelihood(const PredVarModel& m, const TimeSeriesMatrix& y) {
  const double n = static_cast<double>(y.rows() - m.s);
  const double r = static_cast<double>(m.norm.rank());
  return -0.5 * (likelihood_objective(m, y) + n * r * std::log(2.0 * std::numbers::pi));
}

}  // namespace predvar

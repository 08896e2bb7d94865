#include "predvar/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "predvar/metrics.hpp"

namespace predvar {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::predvar: return "predvar";
    case Variant::lavar: return "lavar";
    case Variant::oneshot: return "oneshot";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "predvar") return Variant::predvar;
  if (name == "lavar") return Variant::lavar;
  if (name == "oneshot") return Variant::oneshot;
  throw Error(ErrorKind::InvalidArgument, "unknown variant '" + std::string(name) + "'");
}

namespace {

void check_options(const FitOptions& opts) {
  if (opts.ell < 1) throw Error(ErrorKind::InvalidArgument, "ell must be at least 1");
  if (opts.s < 1) throw Error(ErrorKind::InvalidArgument, "s must be at least 1");
  if (!(opts.tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tol must be positive");
  if (opts.max_iter < 1) throw Error(ErrorKind::InvalidArgument, "max_iter must be at least 1");
  if (!(opts.rank_tol > 0.0 && opts.rank_tol < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "rank_tol must lie in (0, 1)");
  }
}

void check_rows(const TimeSeriesMatrix& y, const FitOptions& opts) {
  const Eigen::Index need = static_cast<Eigen::Index>(opts.s) * (opts.ell + 1) + 1;
  if (y.rows() < need) {
    std::ostringstream msg;
    msg << "need at least s + s*ell + 1 = " << need << " rows, got " << y.rows();
    throw Error(ErrorKind::InsufficientRows, msg.str());
  }
}

Matrix block_rotate(const Matrix& stacked, const Matrix& rstar, int s) {
  const auto r = rstar.rows();
  const auto ell = rstar.cols();
  Matrix out(stacked.rows(), s * ell);
  for (int j = 0; j < s; ++j) {
    out.middleCols(j * ell, ell).noalias() = stacked.middleCols(j * r, r) * rstar;
  }
  return out;
}

Vector clamp_spectrum(const Vector& raw) {
  Vector out = raw;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out(i) > 1.0 || out(i) < 0.0) {
      if (out(i) > 1.0 + 1e-12 || out(i) < -1e-12) {
        spdlog::debug("clamping eigenvalue {} of J from {:.3e}", i, out(i));
      }
      out(i) = std::clamp(out(i), 0.0, 1.0);
    }
  }
  return out;
}

// Symmetric eigendecomposition of Z' Pi(basis_of) Z / N, given compressed coordinates.
numerics::SymEvd projected_evd(const Matrix& span, const Matrix& target_coords, int n) {
  const Matrix q = numerics::orthonormal_basis(span);
  const Matrix g = q.transpose() * target_coords;
  return numerics::sym_evd(numerics::symmetrize(g.transpose() * g / n));
}

Matrix complement_basis(const Matrix& rstar) {
  const auto r = rstar.rows();
  const auto ell = rstar.cols();
  Eigen::HouseholderQR<Matrix> qr(rstar);
  Matrix full = qr.householderQ() * Matrix::Identity(r, r);
  Matrix out = full.rightCols(r - ell);
  numerics::canonical_signs(out);
  return out;
}

Matrix gram_inverse(const Matrix& x, const char* what) {
  const double cond = numerics::gram_condition(x);
  if (!(cond * numerics::kRankTol < 1.0)) {
    std::ostringstream msg;
    msg << what << " is singular (condition estimate " << cond << ")";
    throw Error(ErrorKind::SingularInformation, msg.str());
  }
  const Matrix g = x.transpose() * x;
  return numerics::symmetrize(g.ldlt().solve(Matrix::Identity(g.rows(), g.cols())));
}

/**
 * Maps the normalized-space solution back to original coordinates:
 * R = U D^-1/2 R*, P = U D^1/2 R*, Pbar = [U D^1/2 Pbar*, Utilde],
 * Rbar = [U D^-1/2 Pbar*, Utilde], plus the innovation and static covariances.
 */
PredVarModel assemble_model(const TimeSeriesMatrix& y, const NormalizedData& nd,
                            const Matrix& rstar, const Matrix& static_star,
                            const Vector& latent_r2, const FitOptions& opts) {
  const LaggedData& d = nd.data;
  const NormalizationTransform& t = nd.transform;
  const int ell = static_cast<int>(rstar.cols());
  const int p = t.dim();
  const int r = t.rank();

  const Matrix bb =
      numerics::lstsq(block_rotate(d.design_factor, rstar, d.s), d.target_coords * rstar);

  const Vector root = t.eigenvalues.cwiseSqrt();
  const Matrix up = t.basis * root.asDiagonal();
  const Matrix down = t.basis * root.cwiseInverse().asDiagonal();

  PredVarModel m;
  m.p = p;
  m.ell = ell;
  m.s = d.s;
  m.r = r;
  m.mean = t.mean;
  m.norm = t;
  m.coefs = unstack_coefs(bb, d.s);
  m.loadings = up * rstar;
  m.weights = down * rstar;
  m.static_loadings.resize(p, p - ell);
  m.static_weights.resize(p, p - ell);
  m.static_loadings << up * static_star, t.null_basis;
  m.static_weights << down * static_star, t.null_basis;

  m.latent_innovation_cov = Matrix::Zero(ell, ell);
  for (int i = 0; i < ell; ++i) {
    m.latent_innovation_cov(i, i) = std::max(0.0, 1.0 - latent_r2(i));
  }

  const Matrix ys = (y.rowwise() - t.mean.transpose()).bottomRows(d.n);
  const Matrix vhat = latent_design(d, rstar) * bb;
  const Matrix q = numerics::orthonormal_basis(vhat);
  const Matrix qy = q.transpose() * ys;
  m.innovation_cov = numerics::symmetrize((ys.transpose() * ys - qy.transpose() * qy) / d.n);

  const Matrix noise = ys * m.static_weights;
  m.static_noise_cov = numerics::symmetrize(noise.transpose() * noise / d.n);
  (void)opts;
  return m;
}

Matrix init_from(const LaggedData& d, int ell, Vector* spectrum) {
  const double cond = numerics::gram_condition(d.design_factor);
  if (d.design_factor.rows() < d.design_factor.cols() || !(cond * numerics::kRankTol < 1.0)) {
    std::ostringstream msg;
    msg << "lagged design is rank deficient (condition estimate " << cond << ")";
    throw Error(ErrorKind::RankDeficientDesign, msg.str());
  }
  // Pi(design) Y*_s = Q Q' Y*_s, so J0 = Z'Z / N with Z = Q' Y*_s.
  const Matrix j0 = numerics::symmetrize(d.target_coords.transpose() * d.target_coords / d.n);
  const numerics::SymEvd evd = numerics::sym_evd(j0);
  if (spectrum) *spectrum = clamp_spectrum(evd.eigenvalues);
  return evd.eigenvectors.leftCols(ell);
}

void require_ell_within_rank(int ell, int r) {
  if (ell > r) {
    std::ostringstream msg;
    msg << "ell = " << ell << " exceeds the data covariance rank r = " << r;
    throw Error(ErrorKind::EllExceedsRank, msg.str());
  }
}

}  // namespace

NormalizedData normalize(const TimeSeriesMatrix& y, int s, double rank_tol) {
  if (s < 1) throw Error(ErrorKind::InvalidArgument, "s must be at least 1");
  if (y.cols() < 1) throw Error(ErrorKind::InvalidArgument, "data must have at least one column");
  if (y.rows() < 2 * s + 2) {
    std::ostringstream msg;
    msg << "need at least 2s + 2 = " << 2 * s + 2 << " rows, got " << y.rows();
    throw Error(ErrorKind::InsufficientRows, msg.str());
  }
  numerics::require_finite(y, "data");

  const auto total = y.rows();
  const int n = static_cast<int>(total - s);
  NormalizedData out;
  NormalizationTransform& t = out.transform;
  t.rank_tol = rank_tol;
  t.mean = y.colwise().mean().transpose();

  const Matrix yc = y.rowwise() - t.mean.transpose();
  const Matrix ys = yc.bottomRows(n);
  const numerics::SymEvd evd = numerics::sym_evd(numerics::symmetrize(ys.transpose() * ys / n));
  const double top = evd.eigenvalues(0);
  if (!(top > 1e-14)) {
    throw Error(ErrorKind::DegenerateData, "all covariance eigenvalues are below 1e-14");
  }
  int r = 0;
  while (r < evd.eigenvalues.size() && evd.eigenvalues(r) > rank_tol * top) ++r;
  t.basis = evd.eigenvectors.leftCols(r);
  t.eigenvalues = evd.eigenvalues.head(r);
  t.null_basis = evd.eigenvectors.rightCols(y.cols() - r);
  if (r < y.cols()) spdlog::info("data covariance has rank {} < p = {}", r, y.cols());

  LaggedData& d = out.data;
  d.n = n;
  d.s = s;
  d.r = r;
  d.series = yc * t.basis * t.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal();
  d.target = d.series.bottomRows(n);
  d.design.resize(n, s * r);
  for (int j = 0; j < s; ++j) {
    d.design.middleCols(j * r, r) = d.series.middleRows(s - 1 - j, n);
  }

  Eigen::HouseholderQR<Matrix> qr(d.design);
  const Eigen::Index k = std::min<Eigen::Index>(n, s * r);
  d.design_factor = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  d.target_coords = (qr.householderQ().transpose() * d.target).topRows(k);
  return out;
}

Matrix init_rstar(const LaggedData& d, int ell) {
  if (ell < 1 || ell > d.r) throw Error(ErrorKind::InvalidArgument, "ell must lie in [1, r]");
  return init_from(d, ell, nullptr);
}

Matrix latent_design(const LaggedData& d, const Matrix& rstar) {
  return block_rotate(d.design, rstar, d.s);
}

double latent_rss(const LaggedData& d, const Matrix& rstar, const Matrix& bb) {
  return (d.target * rstar - latent_design(d, rstar) * bb).squaredNorm();
}

std::vector<Matrix> unstack_coefs(const Matrix& bb, int s) {
  const auto ell = bb.cols();
  std::vector<Matrix> coefs;
  coefs.reserve(static_cast<std::size_t>(s));
  for (int j = 0; j < s; ++j) coefs.push_back(bb.middleRows(j * ell, ell).transpose());
  return coefs;
}

Matrix stack_coefs(const std::vector<Matrix>& coefs) {
  if (coefs.empty()) return Matrix(0, 0);
  const auto ell = coefs.front().rows();
  Matrix bb(ell * static_cast<Eigen::Index>(coefs.size()), ell);
  for (std::size_t j = 0; j < coefs.size(); ++j) {
    bb.middleRows(static_cast<Eigen::Index>(j) * ell, ell) = coefs[j].transpose();
  }
  return bb;
}

EmStepResult em_step(const LaggedData& d, const Matrix& rstar, const FitOptions& opts) {
  if (rstar.rows() != d.r || rstar.cols() < 1) {
    throw Error(ErrorKind::DimensionMismatch, "rstar must be r x ell");
  }
  const Matrix design_c = block_rotate(d.design_factor, rstar, d.s);
  EmStepResult out;
  out.bb = numerics::lstsq(design_c, d.target_coords * rstar);
  const numerics::SymEvd evd =
      opts.variant == Variant::lavar ? projected_evd(design_c, d.target_coords, d.n)
                                     : projected_evd(design_c * out.bb, d.target_coords, d.n);
  out.spectrum = clamp_spectrum(evd.eigenvalues);
  out.eigenvectors = evd.eigenvectors;
  out.rstar_next = evd.eigenvectors.leftCols(rstar.cols());
  return out;
}

FitResult fit(const TimeSeriesMatrix& y, const FitOptions& opts) {
  if (opts.variant == Variant::oneshot) return fit_oneshot(y, opts);
  check_options(opts);
  check_rows(y, opts);
  const NormalizedData nd = normalize(y, opts.s, opts.rank_tol);
  const LaggedData& d = nd.data;
  require_ell_within_rank(opts.ell, d.r);

  FitReport report;
  Matrix rstar = init_from(d, opts.ell, &report.initial_spectrum);
  EmStepResult step;
  for (int it = 1; it <= opts.max_iter; ++it) {
    try {
      step = em_step(d, rstar, opts);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RankDeficientDesign) throw;
      std::ostringstream msg;
      msg << "iteration " << it << ": " << e.what();
      throw Error(ErrorKind::RankDeficientDesign, msg.str());
    }
    const double delta = metrics::d_distance(rstar, step.rstar_next);
    report.iterations = it;
    report.objective_trace.push_back(step.spectrum.head(opts.ell).sum());
    report.subspace_deltas.push_back(delta);
    rstar = step.rstar_next;
    if (delta < opts.tol) {
      report.converged = true;
      break;
    }
  }
  if (report.objective_trace.size() >= 2) {
    const auto n = report.objective_trace.size();
    if (report.objective_trace[n - 1] < report.objective_trace[n - 2] - 1e-12) {
      spdlog::debug("objective decreased on the last iteration");
    }
  }
  if (!report.converged) {
    spdlog::warn("{} did not converge in {} iterations (last subspace change {:.3e})",
                 to_string(opts.variant), opts.max_iter, report.subspace_deltas.back());
  }
  report.final_spectrum = step.spectrum;

  const Matrix static_star = step.eigenvectors.rightCols(d.r - opts.ell);
  FitResult out;
  out.model = assemble_model(y, nd, rstar, static_star, step.spectrum.head(opts.ell), opts);
  out.report = std::move(report);
  return out;
}

FitResult fit_oneshot(const TimeSeriesMatrix& y, const FitOptions& opts) {
  check_options(opts);
  check_rows(y, opts);
  const NormalizedData nd = normalize(y, opts.s, opts.rank_tol);
  const LaggedData& d = nd.data;
  const NormalizationTransform& t = nd.transform;
  const int ell = opts.ell;
  const int r = d.r;
  require_ell_within_rank(ell, r);

  FitReport report;
  init_from(d, ell, &report.initial_spectrum);

  // Static weights: eigenvectors of the r - ell smallest eigenvalues of
  // Y*_s' Yaug Yaug' Y*_s, the summed squared lag cross-covariances.
  const Matrix cross = d.design_factor.transpose() * d.target_coords;
  const numerics::SymEvd lagged = numerics::sym_evd(numerics::symmetrize(cross.transpose() * cross));
  const Matrix static_weights_star = lagged.eigenvectors.rightCols(r - ell);

  // R spans the ell smallest eigenvectors of Sy Rbar Rbar' Sy, restricted to range(U).
  const Vector root = t.eigenvalues.cwiseSqrt();
  const Matrix sy_rbar = root.asDiagonal() * static_weights_star;  // U' Sy Rbar in U-coordinates
  const numerics::SymEvd dual = numerics::sym_evd(numerics::symmetrize(sy_rbar * sy_rbar.transpose()));
  const Matrix z = dual.eigenvectors.rightCols(ell);

  // Whitened weights R* = D^1/2 U' R, orthonormalized; R' P = I then holds with P = Sy R (R' Sy R)^-1.
  Matrix rstar = numerics::orthonormal_basis(root.asDiagonal() * z);

  // Rotate within the span so the latent predictions are uncorrelated.
  const Matrix design_c = block_rotate(d.design_factor, rstar, d.s);
  const Matrix bb = numerics::lstsq(design_c, d.target_coords * rstar);
  const numerics::SymEvd j = projected_evd(design_c * bb, d.target_coords, d.n);
  const Matrix predicted = rstar.transpose() * j.eigenvectors * j.eigenvalues.asDiagonal() *
                           j.eigenvectors.transpose() * rstar;
  const numerics::SymEvd inner = numerics::sym_evd(numerics::symmetrize(predicted));
  rstar = rstar * inner.eigenvectors;
  numerics::canonical_signs(rstar);

  report.iterations = 1;
  report.converged = true;
  report.final_spectrum = clamp_spectrum(j.eigenvalues);
  const Vector latent_r2 = clamp_spectrum(inner.eigenvalues);
  report.objective_trace.push_back(latent_r2.sum());

  FitResult out;
  out.model = assemble_model(y, nd, rstar, complement_basis(rstar), latent_r2, opts);
  out.report = std::move(report);
  return out;
}

ParamCovariances param_covariances(const PredVarModel& m, const LaggedData& d) {
  if (d.r != m.norm.rank() || d.s != m.s) {
    throw Error(ErrorKind::DimensionMismatch, "lagged data does not match the model");
  }
  const Matrix rstar = m.norm.eigenvalues.cwiseSqrt().asDiagonal() * m.norm.basis.transpose() * m.weights;
  const Matrix vv = latent_design(d, rstar);
  const Matrix bb = stack_coefs(m.coefs);

  ParamCovariances out;
  out.coef_cov = numerics::symmetrize(numerics::kron(gram_inverse(vv, "V'V"), m.latent_innovation_cov));
  out.loadings_cov =
      numerics::symmetrize(numerics::kron(gram_inverse(vv * bb, "B'V'VB"), m.innovation_cov));
  return out;
}

namespace {

double scaled_cross(const Matrix& left, const Matrix& cov, const Matrix& right) {
  if (left.cols() == 0 || right.cols() == 0) return 0.0;
  const Matrix c = left.transpose() * cov * right;
  const Vector a = (left.transpose() * cov * left).diagonal();
  const Vector b = (right.transpose() * cov * right).diagonal();
  const double ref = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      if (a(i) <= 1e-12 * ref || b(j) <= 1e-12 * ref) continue;
      worst = std::max(worst, std::abs(c(i, j)) / std::sqrt(a(i) * b(j)));
    }
  }
  return worst;
}

double max_cross_correlation(const Matrix& a, const Matrix& b) {
  const Matrix ac = a.rowwise() - a.colwise().mean();
  const Matrix bc = b.rowwise() - b.colwise().mean();
  const Vector na = ac.colwise().norm();
  const Vector nb = bc.colwise().norm();
  const double ref = std::max(na.size() ? na.maxCoeff() : 0.0, nb.size() ? nb.maxCoeff() : 0.0);
  const Matrix c = ac.transpose() * bc;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      if (na(i) <= 1e-9 * ref || nb(j) <= 1e-9 * ref) continue;
      worst = std::max(worst, std::abs(c(i, j)) / (na(i) * nb(j)));
    }
  }
  return worst;
}

}  // namespace

OptimalityReport check_optimality(const PredVarModel& m, const TimeSeriesMatrix& y) {
  const Prediction pred = predict_one_step(m, y);
  const Eigen::Index n = y.rows() - m.s;
  const Matrix ys = (y.rowwise() - m.mean.transpose()).bottomRows(n);
  const Matrix sy = numerics::symmetrize(ys.transpose() * ys / static_cast<double>(n));
  const Matrix& se = m.innovation_cov;

  OptimalityReport out;
  out.innovation_cross = scaled_cross(m.weights, se, m.static_weights);
  out.data_cross = scaled_cross(m.weights, sy, m.static_weights);
  const Matrix se_r = se * m.weights;
  const double scale = numerics::max_abs(se_r);
  out.loading_alignment =
      scale > 0.0 ? numerics::max_abs(se_r - m.loadings * m.weights.transpose() * se_r) / scale : 0.0;

  const Matrix latent_err = ys * m.weights - pred.latent;
  out.innovation_correlation = max_cross_correlation(latent_err, ys * m.static_weights);
  return out;
}

}  // namespace predvar

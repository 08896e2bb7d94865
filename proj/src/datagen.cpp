#include "predvar/datagen.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

namespace predvar::datagen {

namespace {

Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = gauss(rng);
  }
  return out;
}

Matrix random_orthonormal(std::mt19937_64& rng, Eigen::Index p, Eigen::Index k) {
  if (k == 0) return Matrix(p, 0);
  Matrix q = numerics::orthonormal_basis(gaussian(rng, p, k));
  numerics::canonical_signs(q);
  return q;
}

double condition_number(const Matrix& a) {
  if (a.size() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& sv = svd.singularValues();
  const double lo = sv(sv.size() - 1);
  return lo > 0.0 ? sv(0) / lo : std::numeric_limits<double>::infinity();
}

constexpr int kMaxDraws = 1000;

}  // namespace

Eigen::Vector3d lorenz_step(const Eigen::Vector3d& x, const LorenzConfig& cfg, double dt) {
  auto f = [&](const Eigen::Vector3d& u) {
    return Eigen::Vector3d(cfg.sigma * (u(1) - u(0)), u(0) * (cfg.rho - u(2)) - u(1),
                           u(0) * u(1) - cfg.beta * u(2));
  };
  const Eigen::Vector3d k1 = f(x);
  const Eigen::Vector3d k2 = f(x + 0.5 * dt * k1);
  const Eigen::Vector3d k3 = f(x + 0.5 * dt * k2);
  const Eigen::Vector3d k4 = f(x + dt * k3);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Matrix lorenz_trajectory(const LorenzConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  if (cfg.n_samples < 1) throw Error(ErrorKind::InvalidArgument, "n_samples must be positive");
  if (cfg.burn_in < 0) throw Error(ErrorKind::InvalidArgument, "burn_in must be non-negative");
  if (cfg.stride < 1) throw Error(ErrorKind::InvalidArgument, "stride must be at least 1");
  Eigen::Vector3d x = cfg.init;
  for (int k = 0; k < cfg.burn_in; ++k) x = lorenz_step(x, cfg, cfg.dt);
  Matrix out(cfg.n_samples, 3);
  for (int k = 0; k < cfg.n_samples; ++k) {
    if (!x.allFinite()) {
      std::ostringstream msg;
      msg << "trajectory left the finite range at sample " << k;
      throw Error(ErrorKind::NonFiniteTrajectory, msg.str());
    }
    out.row(k) = x.transpose();
    for (int j = 0; j < cfg.stride; ++j) x = lorenz_step(x, cfg, cfg.dt);
  }
  return out;
}

Matrix lorenz_series(const LorenzConfig& cfg) {
  Matrix x = lorenz_trajectory(cfg);
  x.rowwise() -= x.colwise().mean();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double sd = std::sqrt(x.col(j).squaredNorm() / static_cast<double>(x.rows()));
    if (sd > 0.0) x.col(j) /= sd;
  }
  return x;
}

MixingTruth random_loadings(int p, int ell, std::uint64_t seed) {
  if (ell < 1 || ell > p) throw Error(ErrorKind::DimensionMismatch, "need 1 <= ell <= p");
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    MixingTruth t;
    t.loadings = random_orthonormal(rng, p, ell);
    t.static_loadings = random_orthonormal(rng, p, p - ell);
    Matrix full(p, p);
    full << t.loadings, t.static_loadings;
    t.condition = condition_number(full);
    if (t.condition > 10.0) continue;
    const Matrix dual = full.inverse().transpose();
    t.weights = dual.leftCols(ell);
    t.static_weights = dual.rightCols(p - ell);
    return t;
  }
  throw Error(ErrorKind::RankDeficientBasis, "could not draw well-conditioned loadings");
}

TimeSeriesMatrix mix_with_loadings(const Matrix& latent, const MixingTruth& truth,
                                   double noise_scale, std::uint64_t noise_seed) {
  if (latent.cols() != truth.loadings.cols()) {
    std::ostringstream msg;
    msg << "latent has " << latent.cols() << " columns, loadings expect " << truth.loadings.cols();
    throw Error(ErrorKind::DimensionMismatch, msg.str());
  }
  if (!(noise_scale >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise_scale must be >= 0");
  const Matrix centered = latent.rowwise() - latent.colwise().mean();
  const double latent_var =
      centered.squaredNorm() / static_cast<double>(latent.rows() * latent.cols());
  const double sd = std::sqrt(noise_scale * latent_var);

  std::mt19937_64 rng(noise_seed);
  const Matrix noise = sd * gaussian(rng, latent.rows(), truth.static_loadings.cols());
  return latent * truth.loadings.transpose() + noise * truth.static_loadings.transpose();
}

Mixed mix_observations(const Matrix& latent, const MixingConfig& cfg) {
  Mixed out;
  out.truth = random_loadings(cfg.p, cfg.ell, cfg.seed);
  out.y = mix_with_loadings(latent, out.truth, cfg.noise_scale, cfg.seed + 1);
  return out;
}

RrvarData rrvar_series(const RrvarConfig& cfg) {
  if (cfg.ell < 1 || cfg.ell > cfg.p) throw Error(ErrorKind::DimensionMismatch, "need 1 <= ell <= p");
  if (cfg.s < 1) throw Error(ErrorKind::InvalidArgument, "s must be at least 1");
  if (!(cfg.spectral_radius >= 0.0 && cfg.spectral_radius < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "spectral_radius must lie in [0, 1)");
  }
  std::mt19937_64 rng(cfg.seed);
  Matrix full;
  for (int attempt = 0;; ++attempt) {
    if (attempt == kMaxDraws) {
      throw Error(ErrorKind::RankDeficientBasis, "could not draw well-conditioned loadings");
    }
    full = gaussian(rng, cfg.p, cfg.p);
    if (condition_number(full) <= 10.0) break;
  }

  std::vector<Matrix> coefs;
  for (int j = 0; j < cfg.s; ++j) coefs.push_back(gaussian(rng, cfg.ell, cfg.ell));
  if (cfg.spectral_radius == 0.0) {
    for (Matrix& b : coefs) b.setZero();
  } else {
    const double current = companion_spectral_radius(coefs);
    if (!(current > 0.0)) throw Error(ErrorKind::UnstableDynamics, "drawn dynamics are nilpotent");
    const double c = cfg.spectral_radius / current;
    double scale = 1.0;
    for (Matrix& b : coefs) {
      scale *= c;
      b *= scale;
    }
  }

  RrvarData out;
  out.truth = make_model(full.leftCols(cfg.ell), full.rightCols(cfg.p - cfg.ell), coefs,
                         cfg.latent_noise_scale * Matrix::Identity(cfg.ell, cfg.ell),
                         cfg.static_noise_scale * Matrix::Identity(cfg.p - cfg.ell, cfg.p - cfg.ell),
                         Vector::Zero(cfg.p));
  const Simulation sim = simulate_with_latent(out.truth, cfg.n, rng());
  out.y = sim.y;
  out.latent = sim.latent;
  return out;
}

}  // namespace predvar::datagen

#pragma once

#include <cstdint>
#include <vector>

#include "predvar/numerics.hpp"

namespace predvar {

/**
 * Whitening map estimated from the sample covariance of the aligned
 * observations: cov = basis * diag(eigenvalues) * basis'.  Directions in
 * null_basis carry no variance and are excluded from the normalized space.
 */
struct NormalizationTransform {
  Matrix basis;        // p x r, eigenvectors of the nonzero eigenvalues
  Vector eigenvalues;  // r, non-increasing, all above rank_tol * eigenvalues(0)
  Matrix null_basis;   // p x (p - r)
  Vector mean;         // p
  double rank_tol = 1e-10;

  int dim() const { return static_cast<int>(basis.rows()); }
  int rank() const { return static_cast<int>(basis.cols()); }

  /// (y - mean) * basis * diag(eigenvalues)^-1/2, row by row.
  Matrix to_normalized(const TimeSeriesMatrix& y) const;

  /// Trivial transform: basis = I, unit eigenvalues, zero mean.
  static NormalizationTransform identity(int p);
};

/**
 * A fitted (or hand-built) reduced-dimensional VAR model
 *
 *   y_k - mean = loadings * v_k + static_loadings * static_noise_k
 *   v_k = sum_j coefs[j] * v_{k-j} + innovation_k
 *
 * with [weights static_weights]' [loadings static_loadings] = I, so that
 * v_k = weights' (y_k - mean) and static_noise_k = static_weights' (y_k - mean).
 */
struct PredVarModel {
  int p = 0;
  int ell = 0;
  int s = 0;
  int r = 0;
  Vector mean;
  Matrix loadings;               // p x ell
  Matrix static_loadings;        // p x (p - ell)
  Matrix weights;                // p x ell
  Matrix static_weights;         // p x (p - ell)
  std::vector<Matrix> coefs;     // s matrices, ell x ell, lag 1 first
  Matrix latent_innovation_cov;  // ell x ell
  Matrix static_noise_cov;       // (p - ell) x (p - ell)
  Matrix innovation_cov;         // p x p
  NormalizationTransform norm;
};

/// Throws InvalidArgument if the structural invariants of the model do not hold.
void validate(const PredVarModel& m);

/**
 * Builds a model from loadings, dynamics and noise covariances.  The weights
 * follow from inverting [loadings static_loadings] and the full innovation
 * covariance is loadings*cov*loadings' + static_loadings*cov*static_loadings'.
 */
PredVarModel make_model(const Matrix& loadings, const Matrix& static_loadings,
                        const std::vector<Matrix>& coefs, const Matrix& latent_innovation_cov,
                        const Matrix& static_noise_cov, const Vector& mean);

/// Reduced-rank VAR view: y_k = sum_j A_j y_{k-j} + e_k with A_j = P B_j R'.
struct RrvarView {
  std::vector<Matrix> lag_matrices;
  Matrix innovation_cov;
};

struct Prediction {
  Matrix latent;    // (N - s) x ell, v-hat for times s+1..N
  Matrix observed;  // (N - s) x p, mean + P v-hat
};

struct Simulation {
  TimeSeriesMatrix y;
  Matrix latent;
};

struct CanonicalRrvar {
  Matrix loadings;
  std::vector<Matrix> coefs;
  Matrix weights;
};

/// N x ell matrix whose rows are v_k' = (y_k - mean)' R.
Matrix latent_scores(const PredVarModel& m, const TimeSeriesMatrix& y);

/// N x (p - ell) matrix whose rows are (y_k - mean)' Rbar.
Matrix static_noise(const PredVarModel& m, const TimeSeriesMatrix& y);

/// One-step latent predictions from an already computed score matrix.
Matrix predict_latent(const std::vector<Matrix>& coefs, const Matrix& scores);

Prediction predict_one_step(const PredVarModel& m, const TimeSeriesMatrix& y_history);

/// Largest modulus of the eigenvalues of the (ell*s) x (ell*s) companion matrix.
double companion_spectral_radius(const std::vector<Matrix>& coefs);

TimeSeriesMatrix simulate(const PredVarModel& m, int n, std::uint64_t seed);

/// As simulate, also returning the latent series that produced y.
Simulation simulate_with_latent(const PredVarModel& m, int n, std::uint64_t seed);

RrvarView to_rrvar(const PredVarModel& m);

/// Rescales a general reduced-rank factorization so that R' P = I while
/// keeping every P B_j R' unchanged.
CanonicalRrvar canonicalize_rrvar(const Matrix& loadings, const std::vector<Matrix>& coefs,
                                  const Matrix& weights);

/// Gaussian conditional log-likelihood of rows s+1..N, evaluated on the
/// rank-r normalized subspace of the model.
double log_likelihood(const PredVarModel& m, const TimeSeriesMatrix& y);

/// The likelihood objective L (so that log_likelihood = -(L + N r log 2pi)/2),
/// evaluated directly from the full innovation covariance.
double likelihood_objective(const PredVarModel& m, const TimeSeriesMatrix& y);

/// Same objective assembled from the static and latent quadratic forms; it
/// agrees with likelihood_objective when the latent and static innovations
/// are uncorrelated under the model.
double likelihood_objective_decomposed(const PredVarModel& m, const TimeSeriesMatrix& y);

}  // namespace predvar

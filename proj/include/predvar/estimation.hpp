#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "predvar/model.hpp"

namespace predvar {

enum class Variant {
  predvar,  // projects onto the predicted latent series
  lavar,    // projects onto the full lagged latent design
  oneshot,  // non-iterative lagged-covariance baseline
};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

struct FitOptions {
  int ell = 1;
  int s = 1;
  int max_iter = 500;
  double tol = 1e-8;        // on the D-distance between successive weight subspaces
  double rank_tol = 1e-10;  // relative eigenvalue cutoff defining r
  Variant variant = Variant::predvar;
  std::uint64_t seed = 0;   // reserved; initialization is deterministic
};

struct FitReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // trace of the leading ell eigenvalues of J
  Vector final_spectrum;                // all r eigenvalues of the final J
  std::vector<double> subspace_deltas;  // D-distance between successive weights
  Vector initial_spectrum;              // eigenvalues of the initialization matrix J0
};

/**
 * Normalized lagged matrices for a VAR of order s.  With N = rows - s and
 * Y*_i holding normalized rows i..i+N-1, target = Y*_s and
 * design = [Y*_{s-1} ... Y*_0], so design block j (0-based) is lag j + 1.
 *
 * The design is also kept in compressed form: with design = Q T (thin QR),
 * every projection the estimator needs is evaluated through T and
 * target_coords = Q' target, which keeps iteration cost independent of N.
 */
struct LaggedData {
  Matrix series;          // (N + s) x r normalized series
  Matrix target;          // N x r
  Matrix design;          // N x (s r)
  Matrix design_factor;   // (s r) x (s r) upper triangular T
  Matrix target_coords;   // (s r) x r
  int n = 0;
  int s = 0;
  int r = 0;
};

struct NormalizedData {
  NormalizationTransform transform;
  LaggedData data;
};

NormalizedData normalize(const TimeSeriesMatrix& y, int s, double rank_tol);

/// Leading ell eigenvectors of J0 = Y*_s' Pi(design) Y*_s / N.
Matrix init_rstar(const LaggedData& d, int ell);

struct EmStepResult {
  Matrix rstar_next;     // r x ell
  Matrix bb;             // (s ell) x ell stacked coefficients, block j = B_{j+1}'
  Vector spectrum;       // eigenvalues of J, non-increasing, clamped to [0, 1]
  Matrix eigenvectors;   // r x r eigenvectors of J
};

EmStepResult em_step(const LaggedData& d, const Matrix& rstar, const FitOptions& opts);

/// Stacked latent design [V_{s-1} ... V_0] = design * blockdiag(rstar).
Matrix latent_design(const LaggedData& d, const Matrix& rstar);

/// Residual sum of squares of the latent regression V_s ~ latent_design * bb.
double latent_rss(const LaggedData& d, const Matrix& rstar, const Matrix& bb);

/// Splits the stacked coefficient matrix into B_1..B_s.
std::vector<Matrix> unstack_coefs(const Matrix& bb, int s);
Matrix stack_coefs(const std::vector<Matrix>& coefs);

struct FitResult {
  PredVarModel model;
  FitReport report;
};

/// Iterative estimation (predvar or lavar variant; oneshot is dispatched to fit_oneshot).
FitResult fit(const TimeSeriesMatrix& y, const FitOptions& opts);

FitResult fit_oneshot(const TimeSeriesMatrix& y, const FitOptions& opts);

struct ParamCovariances {
  Matrix coef_cov;      // (s ell^2) square, ordering of vec(bb')
  Matrix loadings_cov;  // (p ell) square, ordering of vec(P)
};

ParamCovariances param_covariances(const PredVarModel& m, const LaggedData& d);

/**
 * Residuals of the optimality conditions satisfied by an optimal oblique
 * decomposition, each scaled to be dimensionless:
 *  - innovation_cross: max correlation-scaled entry of R' Se Rbar
 *  - data_cross: same for R' Sy Rbar
 *  - loading_alignment: ||Se R - P R' Se R||_max / ||Se R||_max
 *  - innovation_correlation: max |sample correlation| between the latent
 *    prediction errors and the static noise series
 * Blocks with (numerically) zero variance contribute exactly 0.
 */
struct OptimalityReport {
  double innovation_cross = 0.0;
  double data_cross = 0.0;
  double loading_alignment = 0.0;
  double innovation_correlation = 0.0;
};

OptimalityReport check_optimality(const PredVarModel& m, const TimeSeriesMatrix& y);

}  // namespace predvar

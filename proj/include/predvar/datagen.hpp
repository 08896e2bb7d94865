#pragma once

#include <cstdint>

#include "predvar/model.hpp"

namespace predvar::datagen {

struct LorenzConfig {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
  double dt = 0.01;
  int stride = 4;  // integration steps per recorded sample
  int n_samples = 10000;
  int burn_in = 1000;
  Eigen::Vector3d init{1.0, 1.0, 1.0};
  std::uint64_t seed = 0;  // unused by the integrator
};

/// One classical Runge-Kutta step of the Lorenz system.
Eigen::Vector3d lorenz_step(const Eigen::Vector3d& x, const LorenzConfig& cfg, double dt);

/// Raw trajectory: burn_in steps are discarded, then one row is recorded every stride steps.
Matrix lorenz_trajectory(const LorenzConfig& cfg);

/// lorenz_trajectory with every column standardized to zero mean and unit variance.
Matrix lorenz_series(const LorenzConfig& cfg);

struct MixingConfig {
  int p = 6;
  int ell = 3;
  double noise_scale = 1.0;
  std::uint64_t seed = 0;
};

struct MixingTruth {
  Matrix loadings;         // p x ell, orthonormal columns
  Matrix static_loadings;  // p x (p - ell), orthonormal columns
  Matrix weights;          // dual of loadings
  Matrix static_weights;
  double condition = 1.0;  // condition number of [loadings static_loadings]
};

struct Mixed {
  TimeSeriesMatrix y;
  MixingTruth truth;
};

/// Independent random orthonormal loadings, redrawn until cond([P Pbar]) <= 10.
MixingTruth random_loadings(int p, int ell, std::uint64_t seed);

/// y = v P' + noise Pbar' with iid Gaussian noise of variance noise_scale * mean var(v).
TimeSeriesMatrix mix_with_loadings(const Matrix& latent, const MixingTruth& truth,
                                   double noise_scale, std::uint64_t noise_seed);

/// random_loadings(p, ell, seed) followed by mix_with_loadings with noise seed seed + 1.
Mixed mix_observations(const Matrix& latent, const MixingConfig& cfg);

struct RrvarConfig {
  int p = 5;
  int ell = 2;
  int s = 2;
  int n = 1000;
  std::uint64_t seed = 0;
  double spectral_radius = 0.8;
  double latent_noise_scale = 1.0;
  double static_noise_scale = 1.0;
};

struct RrvarData {
  TimeSeriesMatrix y;
  Matrix latent;
  PredVarModel truth;
};

/// Random canonical model with Gaussian [P Pbar], lag matrices rescaled to the
/// requested companion spectral radius, simulated with model::simulate.
RrvarData rrvar_series(const RrvarConfig& cfg);

}  // namespace predvar::datagen

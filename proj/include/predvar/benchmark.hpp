#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "predvar/datagen.hpp"
#include "predvar/estimation.hpp"

namespace predvar {

struct BenchmarkConfig {
  int trials = 1;
  std::vector<Variant> variants{Variant::predvar};
  int n = 10000;
  int train = 7000;
  int p = 6;
  int ell = 3;
  int s = 2;
  double noise_scale = 1.0;
  std::uint64_t seed_base = 0;
  int workers = 1;
  bool timing = true;
  int max_iter = 500;
  double tol = 1e-8;
  datagen::LorenzConfig lorenz;
};

struct BenchmarkRow {
  int trial = 0;
  std::uint64_t seed = 0;  // noise seed of the trial
  Variant variant = Variant::predvar;
  double d_distance = 0.0;
  double avg_corr_reconstruction = 0.0;  // P-hat v against P v_true, test split
  double avg_corr_prediction = 0.0;      // P-hat v-hat against P v_true
  double avg_corr_recon_vs_pred = 0.0;   // P-hat v-hat against P-hat v
  double train_time = 0.0;               // seconds, 0 when timing is off
  int iterations = 0;
  bool converged = false;
  bool failed = false;
  std::string error;
};

struct TrialMetrics {
  double d_distance;
  double avg_corr_reconstruction;
  double avg_corr_prediction;
  double avg_corr_recon_vs_pred;
};

/// Test-split metrics of a fitted model against the true loadings and latent series.
TrialMetrics evaluate_split(const PredVarModel& m, const Matrix& true_loadings,
                            const TimeSeriesMatrix& y_test, const Matrix& latent_test);

/**
 * One Lorenz latent series and one set of loadings drawn from seed_base are
 * shared by every trial; trial t draws fresh static noise with seed
 * seed_base + 1 + t.  Rows are ordered by trial and then by variant
 * whatever the worker count.
 */
std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& cfg);

void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows);

/// Min, quartiles and max of every metric per variant, over successful rows.
void write_benchmark_summary(std::ostream& out, const std::vector<BenchmarkRow>& rows);

double quantile(std::vector<double> values, double q);

}  // namespace predvar

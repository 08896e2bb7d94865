#include "predvar/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ostream>
#include <thread>

#include "predvar/io.hpp"
#include "predvar/metrics.hpp"

namespace predvar {

TrialMetrics evaluate_split(const PredVarModel& m, const Matrix& true_loadings,
                            const TimeSeriesMatrix& y_test, const Matrix& latent_test) {
  const Matrix truth = latent_test * true_loadings.transpose();
  const Matrix recon = latent_scores(m, y_test) * m.loadings.transpose();
  const Matrix pred = predict_one_step(m, y_test).latent * m.loadings.transpose();
  const Eigen::Index n = pred.rows();

  TrialMetrics out{};
  out.d_distance = metrics::d_distance(m.loadings, true_loadings);
  out.avg_corr_reconstruction = metrics::avg_correlation(recon, truth);
  out.avg_corr_prediction = metrics::avg_correlation(pred, truth.bottomRows(n));
  out.avg_corr_recon_vs_pred = metrics::avg_correlation(pred, recon.bottomRows(n));
  return out;
}

std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.trials < 1) throw Error(ErrorKind::InvalidArgument, "trials must be at least 1");
  if (cfg.variants.empty()) throw Error(ErrorKind::InvalidArgument, "no variants requested");
  if (cfg.train < 2 || cfg.train >= cfg.n) throw Error(ErrorKind::InvalidArgument, "need 2 <= train < n");
  if (cfg.workers < 1) throw Error(ErrorKind::InvalidArgument, "worker count must be at least 1");
  if (cfg.ell != 3) throw Error(ErrorKind::InvalidArgument, "the Lorenz latent series has 3 columns");

  datagen::LorenzConfig lorenz = cfg.lorenz;
  lorenz.n_samples = cfg.n;
  const Matrix latent = datagen::lorenz_series(lorenz);
  const datagen::MixingTruth truth = datagen::random_loadings(cfg.p, cfg.ell, cfg.seed_base);
  const Matrix latent_test = latent.bottomRows(cfg.n - cfg.train);

  const std::size_t nv = cfg.variants.size();
  std::vector<BenchmarkRow> rows(static_cast<std::size_t>(cfg.trials) * nv);
  for (int t = 0; t < cfg.trials; ++t) {
    for (std::size_t v = 0; v < nv; ++v) {
      BenchmarkRow& row = rows[static_cast<std::size_t>(t) * nv + v];
      row.trial = t;
      row.seed = cfg.seed_base + 1 + static_cast<std::uint64_t>(t);
      row.variant = cfg.variants[v];
    }
  }

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      BenchmarkRow& row = rows[i];
      try {
        const TimeSeriesMatrix y = datagen::mix_with_loadings(latent, truth, cfg.noise_scale, row.seed);
        FitOptions opts;
        opts.ell = cfg.ell;
        opts.s = cfg.s;
        opts.variant = row.variant;
        opts.max_iter = cfg.max_iter;
        opts.tol = cfg.tol;
        const auto start = std::chrono::steady_clock::now();
        const FitResult fitted = fit(y.topRows(cfg.train), opts);
        const auto stop = std::chrono::steady_clock::now();
        if (cfg.timing) row.train_time = std::chrono::duration<double>(stop - start).count();
        row.iterations = fitted.report.iterations;
        row.converged = fitted.report.converged;
        const TrialMetrics m =
            evaluate_split(fitted.model, truth.loadings, y.bottomRows(cfg.n - cfg.train), latent_test);
        row.d_distance = m.d_distance;
        row.avg_corr_reconstruction = m.avg_corr_reconstruction;
        row.avg_corr_prediction = m.avg_corr_prediction;
        row.avg_corr_recon_vs_pred = m.avg_corr_recon_vs_pred;
      } catch (const Error& e) {
        row.failed = true;
        row.error = e.what();
      }
    }
  };
  const int count = std::min<int>(cfg.workers, static_cast<int>(rows.size()));
  if (count <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < count; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return rows;
}

void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
  out << "trial,seed,variant,d_distance,avg_corr_reconstruction,avg_corr_prediction,"
         "avg_corr_recon_vs_pred,train_time,iterations,converged,failed\n";
  for (const BenchmarkRow& r : rows) {
    out << r.trial << ',' << r.seed << ',' << to_string(r.variant) << ','
        << io::format_double(r.d_distance) << ',' << io::format_double(r.avg_corr_reconstruction)
        << ',' << io::format_double(r.avg_corr_prediction) << ','
        << io::format_double(r.avg_corr_recon_vs_pred) << ',' << io::format_double(r.train_time)
        << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << (r.failed ? 1 : 0) << '\n';
  }
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

void write_benchmark_summary(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
  std::vector<Variant> seen;
  for (const BenchmarkRow& r : rows) {
    if (std::find(seen.begin(), seen.end(), r.variant) == seen.end()) seen.push_back(r.variant);
  }
  out << "variant,metric,count,min,q25,median,q75,max\n";
  using Field = double BenchmarkRow::*;
  const std::pair<const char*, Field> fields[] = {
      {"d_distance", &BenchmarkRow::d_distance},
      {"avg_corr_reconstruction", &BenchmarkRow::avg_corr_reconstruction},
      {"avg_corr_prediction", &BenchmarkRow::avg_corr_prediction},
      {"avg_corr_recon_vs_pred", &BenchmarkRow::avg_corr_recon_vs_pred},
      {"train_time", &BenchmarkRow::train_time},
  };
  for (Variant v : seen) {
    for (const auto& [name, field] : fields) {
      std::vector<double> xs;
      for (const BenchmarkRow& r : rows) {
        if (r.variant == v && !r.failed) xs.push_back(r.*field);
      }
      out << to_string(v) << ',' << name << ',' << xs.size();
      for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) out << ',' << io::format_double(quantile(xs, q));
      out << '\n';
    }
  }
}

}  // namespace predvar

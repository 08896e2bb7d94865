#include "predvar/selection.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

namespace predvar {

namespace {

constexpr double kPerfectFloor = 1e-12;

void check_domain(const Vector& spectrum, int s, int n) {
  const double ell = static_cast<double>(spectrum.size());
  if (s < 1 || n < 1 || !(s * ell < n)) {
    std::ostringstream msg;
    msg << "s*ell = " << s * ell << " must be below N = " << n;
    throw Error(ErrorKind::PenaltyDomain, msg.str());
  }
  numerics::require_finite(spectrum, "spectrum");
}

}  // namespace

double rrmfpe(const Vector& spectrum, int s, int n) {
  check_domain(spectrum, s, n);
  const double ell = static_cast<double>(spectrum.size());
  const double ratio = s * ell / n;
  double value = std::pow((1.0 + ratio) / (1.0 - ratio), ell);
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    const double gap = 1.0 - spectrum(i);
    if (gap > kPerfectFloor) value *= gap;
  }
  return value;
}

double log_rrmfpe(const Vector& spectrum, int s, int n) {
  check_domain(spectrum, s, n);
  const double ell = static_cast<double>(spectrum.size());
  double value = 2.0 * s * ell * ell / n;
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    const double gap = 1.0 - spectrum(i);
    if (gap > kPerfectFloor) value += std::log(gap);
  }
  return value;
}

SelectionGrid select(const TimeSeriesMatrix& y, IntRange ell_range, IntRange s_range,
                     const FitOptions& base, int workers) {
  if (ell_range.lo < 1 || ell_range.hi < ell_range.lo || s_range.lo < 1 ||
      s_range.hi < s_range.lo) {
    throw Error(ErrorKind::InvalidArgument, "grid ranges must be non-empty and start at 1 or more");
  }
  if (workers < 1) throw Error(ErrorKind::InvalidArgument, "worker count must be at least 1");
  const long long largest = static_cast<long long>(ell_range.hi) * s_range.hi;
  if (largest >= y.rows() - s_range.hi) {
    std::ostringstream msg;
    msg << "largest s*ell = " << largest << " is not below the sample count";
    throw Error(ErrorKind::PenaltyDomain, msg.str());
  }

  SelectionGrid grid;
  for (int ell = ell_range.lo; ell <= ell_range.hi; ++ell) {
    for (int s = s_range.lo; s <= s_range.hi; ++s) {
      SelectionEntry e;
      e.ell = ell;
      e.s = s;
      grid.entries.push_back(e);
    }
  }

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < grid.entries.size(); i = next++) {
      SelectionEntry& e = grid.entries[i];
      FitOptions opts = base;
      opts.ell = e.ell;
      opts.s = e.s;
      try {
        const FitResult fitted = fit(y, opts);
        const int n = static_cast<int>(y.rows()) - e.s;
        e.spectrum = (Vector::Ones(e.ell) - fitted.model.latent_innovation_cov.diagonal())
                         .cwiseMax(0.0)
                         .cwiseMin(1.0);
        e.rrmfpe = rrmfpe(e.spectrum, e.s, n);
        e.log_rrmfpe = log_rrmfpe(e.spectrum, e.s, n);
        e.converged = fitted.report.converged;
      } catch (const Error& err) {
        e.failed = true;
        e.error = err.what();
      }
    }
  };
  const int count = std::min<int>(workers, static_cast<int>(grid.entries.size()));
  if (count <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < count; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  const SelectionEntry* best = nullptr;
  for (const SelectionEntry& e : grid.entries) {
    if (e.failed) {
      spdlog::info("cell ell={} s={} failed: {}", e.ell, e.s, e.error);
      continue;
    }
    if (!e.converged) continue;
    if (!best || e.log_rrmfpe < best->log_rrmfpe) best = &e;
  }
  if (!best) throw Error(ErrorKind::AllCellsFailed, "no grid cell produced a converged fit");
  grid.best_ell = best->ell;
  grid.best_s = best->s;
  return grid;
}

}  // namespace predvar

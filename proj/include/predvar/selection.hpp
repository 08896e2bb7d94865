#pragma once

#include <string>
#include <vector>

#include "predvar/estimation.hpp"

namespace predvar {

/// ((1 + s l/N) / (1 - s l/N))^l * prod(1 - lambda_i) over factors above 1e-12.
double rrmfpe(const Vector& spectrum, int s, int n);

/// sum log(1 - lambda_i) over factors above 1e-12, plus 2 s l^2 / N.
double log_rrmfpe(const Vector& spectrum, int s, int n);

struct SelectionEntry {
  int ell = 0;
  int s = 0;
  double rrmfpe = 0.0;
  double log_rrmfpe = 0.0;
  Vector spectrum;  // latent one-step R^2 of the fitted model, length ell
  bool converged = false;
  bool failed = false;
  std::string error;
};

struct SelectionGrid {
  std::vector<SelectionEntry> entries;  // ell-major, then s
  int best_ell = 0;
  int best_s = 0;
};

struct IntRange {
  int lo = 1;
  int hi = 1;
};

/**
 * Fits every (ell, s) pair of the grid and picks the converged cell with the
 * smallest log criterion, ties going to smaller ell and then smaller s.
 * Cells are spread over `workers` threads; the result does not depend on it.
 */
SelectionGrid select(const TimeSeriesMatrix& y, IntRange ell_range, IntRange s_range,
                     const FitOptions& base, int workers = 1);

}  // namespace predvar

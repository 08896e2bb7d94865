#pragma once

#include "predvar/numerics.hpp"

namespace predvar::metrics {

/**
 * Span-based subspace distance sqrt(1 - trace(Pi1 Pi2) / l1), l1 >= l2.
 * Inputs are swapped when the first has fewer columns.  The value depends
 * only on the column spans.
 */
double d_distance(const Matrix& a, const Matrix& b);

/// Mean over columns of |corr(a_i, b_i)|; constant columns contribute 0.
double avg_correlation(const Matrix& a, const Matrix& b);

/// Cosines of the principal angles between two spans, descending.
Vector principal_cosines(const Matrix& a, const Matrix& b);

}  // namespace predvar::metrics

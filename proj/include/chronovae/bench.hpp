#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chronovae/tensor.hpp"

namespace chronovae {

struct ScalingRow {
  Index length = 0;
  double hope_ms = 0.0;
  double attn_ms = 0.0;
  /// t(L) / t(L_prev); NaN on the first row.
  double hope_ratio = 0.0;
  double attn_ratio = 0.0;
};

struct ScalingTable {
  std::vector<ScalingRow> rows;
  /// Least-squares slope of log(ms) against log(L); NaN with fewer than 2 rows.
  double hope_exponent = 0.0;
  double attn_exponent = 0.0;

  /// L,hope_ms,attn_ms,hope_ratio,attn_ratio
  std::string to_csv() const;
};

/// Single-head softmax(Q K^T / sqrt(D)) V with Q, K, V projections; the
/// quadratic reference the HOPE block is timed against.
Matrix attention_forward(const Matrix& x, const Matrix& wq, const Matrix& wk, const Matrix& wv);

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

/// Median eval-mode forward time of one HOPE block and of the attention
/// baseline at every length. lengths must be strictly ascending, reps >= 3.
ScalingTable scaling_probe(const std::vector<Index>& lengths, Index dim, int reps,
                           std::uint64_t seed = 0);

}  // namespace chronovae

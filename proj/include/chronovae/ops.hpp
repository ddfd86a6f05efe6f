#pragma once

#include <span>
#include <vector>

#include "chronovae/rng.hpp"
#include "chronovae/tensor.hpp"

namespace chronovae {

// Differentiable operations. Rows are time steps (or batch rows), columns
// features. Shape violations throw DimensionError.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a);
Tensor operator*(Scalar s, const Tensor& a);
Tensor hadamard(const Tensor& a, const Tensor& b);
/// s * a + shift, elementwise.
Tensor affine(const Tensor& a, Scalar scale, Scalar shift);

/// a (m x n) plus a 1 x n row broadcast over every row.
Tensor add_row(const Tensor& a, const Tensor& row);
/// Repeats a 1 x n row into an m x n matrix.
Tensor broadcast_rows(const Tensor& row, Index rows);

/// x W + b with W stored in x out.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor square(const Tensor& x);
/// Elementwise clamp; gradient passes only strictly inside (lo, hi).
Tensor clamp(const Tensor& x, Scalar lo, Scalar hi);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Mean over the time axis: L x D -> 1 x D.
Tensor adaptive_avg_pool_time(const Tensor& x);

Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& x, Index start, Index count);
Tensor slice_cols(const Tensor& x, Index start, Index count);
/// Row-major reinterpretation.
Tensor reshape(const Tensor& x, Index rows, Index cols);

/// Per-row normalization over the last axis, then gamma/beta (1 x D rows).
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Scalar eps = 1e-5);

/// Zero-padded cross-correlation. x: L x C_in; weight: C_out x (C_in*K)
/// flattened with index c*K + k; bias: 1 x C_out. padding must be (K-1)/2.
Tensor conv1d_same(const Tensor& x, const Tensor& weight, const Tensor& bias, Index kernel,
                   Index padding);

/// Moving average over time with replicate padding, L x C -> L x C.
Tensor avg_pool1d_same(const Tensor& x, Index kernel);

/// Inverted dropout; exact identity when !training or p == 0.
Tensor dropout(const Tensor& x, Scalar p, bool training, Rng& rng);

/// Mean softmax cross-entropy of logits (N x K) against integer labels.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

}  // namespace chronovae

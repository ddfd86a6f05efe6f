#pragma once

// Graph-free dense kernels, templated on the Eigen expression type so they
// serve both the autodiff ops and plain value computations (decomposition
// targets, benchmarks, reference oracles).
//
// Time runs along rows; channels along columns.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "chronovae/error.hpp"

namespace chronovae::kernels {

template <typename Scalar>
using DynMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// x * Phi(x) with the exact Gaussian CDF.
template <typename Scalar>
Scalar gelu(Scalar x) {
  return Scalar(0.5) * x * (Scalar(1) + std::erf(x / std::numbers::sqrt2_v<Scalar>));
}

template <typename Scalar>
Scalar gelu_derivative(Scalar x) {
  const Scalar cdf = Scalar(0.5) * (Scalar(1) + std::erf(x / std::numbers::sqrt2_v<Scalar>));
  const Scalar pdf = std::exp(Scalar(-0.5) * x * x) * std::numbers::inv_sqrtpi_v<Scalar> /
                     std::numbers::sqrt2_v<Scalar>;
  return cdf + x * pdf;
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

/// Unfolds an L x C signal into L x (C*K) windows with zero padding.
/// Column c*K + k of row t holds x[t + k - padding, c].
template <typename Derived>
DynMatrix<typename Derived::Scalar> im2col(const Eigen::MatrixBase<Derived>& x, Eigen::Index kernel,
                                           Eigen::Index padding) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index len = x.rows();
  const Eigen::Index channels = x.cols();
  DynMatrix<Scalar> cols = DynMatrix<Scalar>::Zero(len, channels * kernel);
  for (Eigen::Index t = 0; t < len; ++t) {
    for (Eigen::Index c = 0; c < channels; ++c) {
      for (Eigen::Index k = 0; k < kernel; ++k) {
        const Eigen::Index src = t + k - padding;
        if (src >= 0 && src < len) cols(t, c * kernel + k) = x(src, c);
      }
    }
  }
  return cols;
}

/// Adjoint of im2col: scatter-adds window gradients back onto the signal.
template <typename Derived>
DynMatrix<typename Derived::Scalar> col2im(const Eigen::MatrixBase<Derived>& cols, Eigen::Index len,
                                           Eigen::Index channels, Eigen::Index kernel,
                                           Eigen::Index padding) {
  using Scalar = typename Derived::Scalar;
  DynMatrix<Scalar> x = DynMatrix<Scalar>::Zero(len, channels);
  for (Eigen::Index t = 0; t < len; ++t) {
    for (Eigen::Index c = 0; c < channels; ++c) {
      for (Eigen::Index k = 0; k < kernel; ++k) {
        const Eigen::Index src = t + k - padding;
        if (src >= 0 && src < len) x(src, c) += cols(t, c * kernel + k);
      }
    }
  }
  return x;
}

inline void check_pool_kernel(Eigen::Index kernel, Eigen::Index len) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw ConfigError("avg_pool1d_same: kernel must be odd and positive, got " +
                      std::to_string(kernel));
  }
  if (kernel > 2 * len - 1) {
    throw ConfigError("avg_pool1d_same: kernel " + std::to_string(kernel) +
                      " exceeds 2L-1 for L=" + std::to_string(len));
  }
}

/// Length-preserving moving average along time with edge replication.
///
/// Each window mean is accumulated as offsets from the centre sample, so a
/// constant window returns its value bit-for-bit.
template <typename Derived>
DynMatrix<typename Derived::Scalar> moving_average_replicate(const Eigen::MatrixBase<Derived>& x,
                                                             Eigen::Index kernel) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index len = x.rows();
  check_pool_kernel(kernel, len);
  const Eigen::Index half = kernel / 2;
  DynMatrix<Scalar> out(len, x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index t = 0; t < len; ++t) {
      const Scalar centre = x(t, c);
      Scalar offset = 0;
      for (Eigen::Index j = -half; j <= half; ++j) {
        const Eigen::Index src = std::clamp<Eigen::Index>(t + j, 0, len - 1);
        offset += x(src, c) - centre;
      }
      out(t, c) = centre + offset / Scalar(kernel);
    }
  }
  return out;
}

/// Adjoint of moving_average_replicate.
template <typename Derived>
DynMatrix<typename Derived::Scalar> moving_average_replicate_adjoint(
    const Eigen::MatrixBase<Derived>& grad_out, Eigen::Index kernel) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index len = grad_out.rows();
  const Eigen::Index half = kernel / 2;
  DynMatrix<Scalar> grad_in = DynMatrix<Scalar>::Zero(len, grad_out.cols());
  const Scalar w = Scalar(1) / Scalar(kernel);
  for (Eigen::Index t = 0; t < len; ++t) {
    for (Eigen::Index j = -half; j <= half; ++j) {
      const Eigen::Index src = std::clamp<Eigen::Index>(t + j, 0, len - 1);
      grad_in.row(src) += w * grad_out.row(t);
    }
  }
  return grad_in;
}

}  // namespace chronovae::kernels

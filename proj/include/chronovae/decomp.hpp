#pragma once

#include "chronovae/kernels.hpp"
#include "chronovae/tensor.hpp"

namespace chronovae {

/// Moving-average trend plus residual seasonal component of an L x 1 series.
/// Both are plain values: they supervise the decoders and carry no graph.
template <typename Scalar>
struct BasicDecomposition {
  kernels::DynMatrix<Scalar> trend;
  kernels::DynMatrix<Scalar> seasonal;
};

using Decomposition = BasicDecomposition<Scalar>;

template <typename Derived>
BasicDecomposition<typename Derived::Scalar> decompose(const Eigen::MatrixBase<Derived>& x,
                                                       Eigen::Index kernel) {
  if (x.rows() < 1) throw DimensionError("decompose: empty series");
  BasicDecomposition<typename Derived::Scalar> d;
  d.trend = kernels::moving_average_replicate(x, kernel);
  d.seasonal = x - d.trend;
  return d;
}

}  // namespace chronovae

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "chronovae/tensor.hpp"

namespace chronovae {

/// Central-difference gradient of a scalar function of a matrix:
/// (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
template <typename F>
Matrix finite_diff_gradient(F&& f, const Matrix& x, Scalar h = 1e-5) {
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar orig = probe.data()[i];
    probe.data()[i] = orig + h;
    const Scalar up = f(static_cast<const Matrix&>(probe));
    probe.data()[i] = orig - h;
    const Scalar down = f(static_cast<const Matrix&>(probe));
    probe.data()[i] = orig;
    grad.data()[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// |a - b| / max(|a|, |b|, floor), the comparison used for gradient checks.
inline Scalar relative_error(Scalar a, Scalar b, Scalar floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline Scalar max_relative_error(const Matrix& a, const Matrix& b, Scalar floor = 1e-6) {
  Scalar worst = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    worst = std::max(worst, relative_error(a.data()[i], b.data()[i], floor));
  }
  return worst;
}

}  // namespace chronovae

#include "chronovae/ops.hpp"

#include <cmath>
#include <string>

#include "chronovae/kernels.hpp"

namespace chronovae {

namespace {

std::string shape_str(const Tensor& t) {
  return "[" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + "]";
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                         shape_str(b));
  }
}

detail::Node& in(detail::Node& self, std::size_t i) { return *self.inputs[i]; }

template <typename F, typename DF>
Tensor unary_elementwise(const Tensor& x, F f, DF df) {
  Matrix out = x.value().unaryExpr(f);
  return make_result(std::move(out), {x}, [df](detail::Node& self) {
    auto& a = in(self, 0);
    if (a.requires_grad) a.accumulate(self.grad.cwiseProduct(a.value.unaryExpr(df)));
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner extents differ " + shape_str(a) + " * " + shape_str(b));
  }
  Matrix out = a.value() * b.value();
  return make_result(std::move(out), {a, b}, [](detail::Node& self) {
    auto& lhs = in(self, 0);
    auto& rhs = in(self, 1);
    if (lhs.requires_grad) lhs.accumulate(self.grad * rhs.value.transpose());
    if (rhs.requires_grad) rhs.accumulate(lhs.value.transpose() * self.grad);
  });
}

Tensor transpose(const Tensor& a) {
  Matrix out = a.value().transpose();
  return make_result(std::move(out), {a}, [](detail::Node& self) {
    auto& x = in(self, 0);
    if (x.requires_grad) x.accumulate(self.grad.transpose());
  });
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Matrix out = a.value() + b.value();
  return make_result(std::move(out), {a, b}, [](detail::Node& self) {
    for (std::size_t i = 0; i < 2; ++i) {
      if (in(self, i).requires_grad) in(self, i).accumulate(self.grad);
    }
  });
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Matrix out = a.value() - b.value();
  return make_result(std::move(out), {a, b}, [](detail::Node& self) {
    if (in(self, 0).requires_grad) in(self, 0).accumulate(self.grad);
    if (in(self, 1).requires_grad) in(self, 1).accumulate(-self.grad);
  });
}

Tensor operator-(const Tensor& a) { return (-1.0) * a; }

Tensor operator*(Scalar s, const Tensor& a) { return affine(a, s, 0.0); }

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Matrix out = a.value().cwiseProduct(b.value());
  return make_result(std::move(out), {a, b}, [](detail::Node& self) {
    auto& x = in(self, 0);
    auto& y = in(self, 1);
    if (x.requires_grad) x.accumulate(self.grad.cwiseProduct(y.value));
    if (y.requires_grad) y.accumulate(self.grad.cwiseProduct(x.value));
  });
}

Tensor affine(const Tensor& a, Scalar scale, Scalar shift) {
  Matrix out = (scale * a.value().array() + shift).matrix();
  return make_result(std::move(out), {a}, [scale](detail::Node& self) {
    if (in(self, 0).requires_grad) in(self, 0).accumulate(scale * self.grad);
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw DimensionError("add_row: expected 1x" + std::to_string(a.cols()) + " row, got " +
                         shape_str(row));
  }
  Matrix out = a.value().rowwise() + row.value().row(0);
  return make_result(std::move(out), {a, row}, [](detail::Node& self) {
    if (in(self, 0).requires_grad) in(self, 0).accumulate(self.grad);
    if (in(self, 1).requires_grad) in(self, 1).accumulate(self.grad.colwise().sum());
  });
}

Tensor broadcast_rows(const Tensor& row, Index rows) {
  if (row.rows() != 1) throw DimensionError("broadcast_rows: expected a row, got " + shape_str(row));
  Matrix out = row.value().replicate(rows, 1);
  return make_result(std::move(out), {row}, [](detail::Node& self) {
    if (in(self, 0).requires_grad) in(self, 0).accumulate(self.grad.colwise().sum());
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return add_row(matmul(x, weight), bias);
}

Tensor gelu(const Tensor& x) {
  return unary_elementwise(
      x, [](Scalar v) { return kernels::gelu(v); },
      [](Scalar v) { return kernels::gelu_derivative(v); });
}

Tensor sigmoid(const Tensor& x) {
  Matrix out = x.value().unaryExpr([](Scalar v) { return kernels::sigmoid(v); });
  return make_result(out, {x}, [out](detail::Node& self) {
    auto& a = in(self, 0);
    if (a.requires_grad) {
      a.accumulate(self.grad.cwiseProduct(out.cwiseProduct((1.0 - out.array()).matrix())));
    }
  });
}

Tensor exp(const Tensor& x) {
  Matrix out = x.value().array().exp().matrix();
  return make_result(out, {x}, [out](detail::Node& self) {
    if (in(self, 0).requires_grad) in(self, 0).accumulate(self.grad.cwiseProduct(out));
  });
}

Tensor square(const Tensor& x) {
  return unary_elementwise(
      x, [](Scalar v) { return v * v; }, [](Scalar v) { return 2.0 * v; });
}

Tensor clamp(const Tensor& x, Scalar lo, Scalar hi) {
  return unary_elementwise(
      x, [lo, hi](Scalar v) { return std::clamp(v, lo, hi); },
      [lo, hi](Scalar v) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& x) {
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  return make_result(std::move(out), {x}, [](detail::Node& self) {
    auto& a = in(self, 0);
    if (a.requires_grad) a.accumulate(Matrix::Constant(a.value.rows(), a.value.cols(), self.grad(0, 0)));
  });
}

Tensor mean(const Tensor& x) { return affine(sum(x), 1.0 / static_cast<Scalar>(x.size()), 0.0); }

Tensor adaptive_avg_pool_time(const Tensor& x) {
  if (x.rows() < 1) throw DimensionError("adaptive_avg_pool_time: empty sequence");
  Matrix out = x.value().colwise().mean();
  return make_result(std::move(out), {x}, [](detail::Node& self) {
    auto& a = in(self, 0);
    if (a.requires_grad) {
      const Scalar inv = 1.0 / static_cast<Scalar>(a.value.rows());
      a.accumulate((inv * self.grad).replicate(a.value.rows(), 1));
    }
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("concat_cols: row mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  const Index split = a.cols();
  return make_result(std::move(out), {a, b}, [split](detail::Node& self) {
    if (in(self, 0).requires_grad) in(self, 0).accumulate(self.grad.leftCols(split));
    if (in(self, 1).requires_grad) {
      in(self, 1).accumulate(self.grad.rightCols(self.grad.cols() - split));
    }
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const Index cols = parts.front().cols();
  Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw DimensionError("concat_rows: column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<Index> offsets;
  offsets.reserve(parts.size());
  Index at = 0;
  for (const auto& p : parts) {
    offsets.push_back(at);
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return make_result(std::move(out), std::vector<Tensor>(parts.begin(), parts.end()),
                     [offsets](detail::Node& self) {
                       for (std::size_t i = 0; i < self.inputs.size(); ++i) {
                         auto& p = in(self, i);
                         if (p.requires_grad) {
                           p.accumulate(self.grad.middleRows(offsets[i], p.value.rows()));
                         }
                       }
                     });
}

Tensor slice_rows(const Tensor& x, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > x.rows()) {
    throw DimensionError("slice_rows: [" + std::to_string(start) + ", +" + std::to_string(count) +
                         ") outside " + shape_str(x));
  }
  Matrix out = x.value().middleRows(start, count);
  return make_result(std::move(out), {x}, [start, count](detail::Node& self) {
    auto& a = in(self, 0);
    if (a.requires_grad) {
      Matrix g = Matrix::Zero(a.value.rows(), a.value.cols());
      g.middleRows(start, count) = self.grad;
      a.accumulate(g);
    }
  });
}

Tensor slice_cols(const Tensor& x, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > x.cols()) {
    throw DimensionError("slice_cols: range outside " + shape_str(x));
  }
  Matrix out = x.value().middleCols(start, count);
  return make_result(std::move(out), {x}, [start, count](detail::Node& self) {
    auto& a = in(self, 0);
    if (a.requires_grad) {
      Matrix g = Matrix::Zero(a.value.rows(), a.value.cols());
      g.middleCols(start, count) = self.grad;
      a.accumulate(g);
    }
  });
}

Tensor reshape(const Tensor& x, Index rows, Index cols) {
  if (rows * cols != x.size()) {
    throw DimensionError("reshape: " + shape_str(x) + " to [" + std::to_string(rows) + "x" +
                         std::to_string(cols) + "]");
  }
  Matrix out = Eigen::Map<const Matrix>(x.value().data(), rows, cols);
  return make_result(std::move(out), {x}, [](detail::Node& self) {
    auto& a = in(self, 0);
    if (a.requires_grad) {
      a.accumulate(Eigen::Map<const Matrix>(self.grad.data(), a.value.rows(), a.value.cols()));
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Scalar eps) {
  const Index d = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != d || beta.rows() != 1 || beta.cols() != d) {
    throw DimensionError("layer_norm: affine parameters must be 1x" + std::to_string(d));
  }
  if (d == 1 && eps == 0.0) throw NumericError("layer_norm: D == 1 with eps == 0 has zero variance");

  const Matrix& v = x.value();
  Vector mu = v.rowwise().mean();
  Matrix centered = v.colwise() - mu;
  Vector inv_std =
      ((centered.array().square().rowwise().sum() / static_cast<Scalar>(d)) + eps).rsqrt().matrix();
  Matrix normalized = centered.array().colwise() * inv_std.array();
  Matrix out = (normalized.array().rowwise() * gamma.value().row(0).array()).rowwise() +
               beta.value().row(0).array();

  return make_result(std::move(out), {x, gamma, beta},
                     [normalized, inv_std, d](detail::Node& self) {
                       auto& xn = in(self, 0);
                       auto& g = in(self, 1);
                       auto& b = in(self, 2);
                       if (g.requires_grad) {
                         g.accumulate(self.grad.cwiseProduct(normalized).colwise().sum());
                       }
                       if (b.requires_grad) b.accumulate(self.grad.colwise().sum());
                       if (xn.requires_grad) {
                         Matrix gn = self.grad.array().rowwise() * g.value.row(0).array();
                         Vector mean_gn = gn.rowwise().mean();
                         Vector mean_gn_n = gn.cwiseProduct(normalized).rowwise().mean();
                         Matrix dx = gn.colwise() - mean_gn;
                         dx -= (normalized.array().colwise() * mean_gn_n.array()).matrix();
                         dx = dx.array().colwise() * inv_std.array();
                         xn.accumulate(dx);
                       }
                     });
}

Tensor conv1d_same(const Tensor& x, const Tensor& weight, const Tensor& bias, Index kernel,
                   Index padding) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw ConfigError("conv1d_same: kernel must be odd for length-preserving padding, got " +
                      std::to_string(kernel));
  }
  if (padding != (kernel - 1) / 2) {
    throw ConfigError("conv1d_same: padding must be (K-1)/2 = " + std::to_string((kernel - 1) / 2));
  }
  const Index c_in = x.cols();
  if (weight.cols() != c_in * kernel) {
    throw DimensionError("conv1d_same: weight " + shape_str(weight) + " incompatible with C_in=" +
                         std::to_string(c_in) + ", K=" + std::to_string(kernel));
  }
  if (bias.rows() != 1 || bias.cols() != weight.rows()) {
    throw DimensionError("conv1d_same: bias must be 1x" + std::to_string(weight.rows()));
  }
  Matrix cols = kernels::im2col(x.value(), kernel, padding);
  Matrix out = (cols * weight.value().transpose()).rowwise() + bias.value().row(0);
  const Index len = x.rows();
  return make_result(std::move(out), {x, weight, bias},
                     [cols, len, c_in, kernel, padding](detail::Node& self) {
                       auto& xn = in(self, 0);
                       auto& w = in(self, 1);
                       auto& b = in(self, 2);
                       if (w.requires_grad) w.accumulate(self.grad.transpose() * cols);
                       if (b.requires_grad) b.accumulate(self.grad.colwise().sum());
                       if (xn.requires_grad) {
                         Matrix dcols = self.grad * w.value;
                         xn.accumulate(kernels::col2im(dcols, len, c_in, kernel, padding));
                       }
                     });
}

Tensor avg_pool1d_same(const Tensor& x, Index kernel) {
  Matrix out = kernels::moving_average_replicate(x.value(), kernel);
  return make_result(std::move(out), {x}, [kernel](detail::Node& self) {
    auto& a = in(self, 0);
    if (a.requires_grad) a.accumulate(kernels::moving_average_replicate_adjoint(self.grad, kernel));
  });
}

Tensor dropout(const Tensor& x, Scalar p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout: p must lie in [0, 1), got " + std::to_string(p));
  if (!training || p == 0.0) return x;
  const Scalar keep_scale = 1.0 / (1.0 - p);
  Matrix mask(x.rows(), x.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.bernoulli(p) ? 0.0 : keep_scale;
  Matrix out = x.value().cwiseProduct(mask);
  return make_result(std::move(out), {x}, [mask](detail::Node& self) {
    if (in(self, 0).requires_grad) in(self, 0).accumulate(self.grad.cwiseProduct(mask));
  });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  const Index n = logits.rows();
  const Index k = logits.cols();
  if (static_cast<Index>(labels.size()) != n) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(n) + " rows");
  }
  Matrix probs(n, k);
  Scalar loss = 0.0;
  for (Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= k) throw DimensionError("softmax_cross_entropy: label out of range");
    const Scalar m = logits.value().row(i).maxCoeff();
    const auto shifted = (logits.value().row(i).array() - m).exp();
    const Scalar z = shifted.sum();
    probs.row(i) = shifted / z;
    loss -= logits.value()(i, y) - m - std::log(z);
  }
  Matrix out(1, 1);
  out(0, 0) = loss / static_cast<Scalar>(n);
  std::vector<int> targets(labels.begin(), labels.end());
  return make_result(std::move(out), {logits}, [probs, targets](detail::Node& self) {
    auto& a = in(self, 0);
    if (!a.requires_grad) return;
    Matrix g = probs;
    for (std::size_t i = 0; i < targets.size(); ++i) g(static_cast<Index>(i), targets[i]) -= 1.0;
    a.accumulate((self.grad(0, 0) / static_cast<Scalar>(targets.size())) * g);
  });
}

}  // namespace chronovae

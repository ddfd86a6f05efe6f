#pragma once

#include <string>
#include <vector>

#include "chronovae/ops.hpp"
#include "chronovae/rng.hpp"
#include "chronovae/tensor.hpp"

namespace chronovae {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using ParamList = std::vector<NamedTensor>;

/// Affine map x W + b with W stored in x out.
struct Linear {
  Tensor weight;
  Tensor bias;
};

/// Uniform(-1/sqrt(in), 1/sqrt(in)) for weight and bias.
Linear make_linear(Index in, Index out, Rng& rng);
Linear make_zero_linear(Index in, Index out);
inline Tensor apply(const Linear& l, const Tensor& x) { return linear(x, l.weight, l.bias); }

/// Two affine layers with a GELU between.
struct Mlp {
  Linear fc1;
  Linear fc2;
};

Mlp make_mlp(Index in, Index hidden, Index out, Rng& rng);
inline Tensor apply(const Mlp& m, const Tensor& x) { return apply(m.fc2, gelu(apply(m.fc1, x))); }

struct LayerNormParams {
  Tensor gamma;
  Tensor beta;
  Scalar eps = 1e-5;
};

LayerNormParams make_layer_norm(Index dim, Scalar gamma_init = 1.0);
inline Tensor apply(const LayerNormParams& ln, const Tensor& x) {
  return layer_norm(x, ln.gamma, ln.beta, ln.eps);
}

void collect(const std::string& prefix, const Linear& l, ParamList& out);
void collect(const std::string& prefix, const Mlp& m, ParamList& out);
void collect(const std::string& prefix, const LayerNormParams& ln, ParamList& out);

Index parameter_count(const ParamList& params);
void zero_grad(const ParamList& params);
/// Deep copies of parameter values, in list order.
std::vector<Matrix> snapshot(const ParamList& params);
void restore(const ParamList& params, const std::vector<Matrix>& values);

}  // namespace chronovae

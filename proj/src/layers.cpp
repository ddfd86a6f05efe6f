#include "chronovae/layers.hpp"

#include <cmath>

namespace chronovae {

namespace {

Tensor uniform_param(Index rows, Index cols, Scalar bound, Rng& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return Tensor(std::move(m), true);
}

}  // namespace

Linear make_linear(Index in, Index out, Rng& rng) {
  const Scalar bound = 1.0 / std::sqrt(static_cast<Scalar>(in));
  Linear l;
  l.weight = uniform_param(in, out, bound, rng);
  l.bias = uniform_param(1, out, bound, rng);
  return l;
}

Linear make_zero_linear(Index in, Index out) {
  return Linear{Tensor::zeros(in, out, true), Tensor::zeros(1, out, true)};
}

Mlp make_mlp(Index in, Index hidden, Index out, Rng& rng) {
  Mlp m;
  m.fc1 = make_linear(in, hidden, rng);
  m.fc2 = make_linear(hidden, out, rng);
  return m;
}

LayerNormParams make_layer_norm(Index dim, Scalar gamma_init) {
  LayerNormParams ln;
  ln.gamma = Tensor(Matrix::Constant(1, dim, gamma_init), true);
  ln.beta = Tensor::zeros(1, dim, true);
  return ln;
}

void collect(const std::string& prefix, const Linear& l, ParamList& out) {
  out.push_back({prefix + ".weight", l.weight});
  out.push_back({prefix + ".bias", l.bias});
}

void collect(const std::string& prefix, const Mlp& m, ParamList& out) {
  collect(prefix + ".fc1", m.fc1, out);
  collect(prefix + ".fc2", m.fc2, out);
}

void collect(const std::string& prefix, const LayerNormParams& ln, ParamList& out) {
  out.push_back({prefix + ".gamma", ln.gamma});
  out.push_back({prefix + ".beta", ln.beta});
}

Index parameter_count(const ParamList& params) {
  Index n = 0;
  for (const auto& p : params) n += p.tensor.size();
  return n;
}

void zero_grad(const ParamList& params) {
  for (auto p : params) p.tensor.zero_grad();
}

std::vector<Matrix> snapshot(const ParamList& params) {
  std::vector<Matrix> values;
  values.reserve(params.size());
  for (const auto& p : params) values.push_back(p.tensor.value());
  return values;
}

void restore(const ParamList& params, const std::vector<Matrix>& values) {
  if (values.size() != params.size()) throw DimensionError("restore: parameter count changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].tensor;
    t.mutable_value() = values[i];
  }
}

}  // namespace chronovae

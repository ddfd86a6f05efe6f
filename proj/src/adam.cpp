#include "chronovae/adam.hpp"

#include <cmath>

namespace chronovae {

AdamState make_adam(const ParamList& params, AdamOptions options) {
  AdamState s;
  s.options = options;
  for (const auto& p : params) {
    s.first_moment.push_back(Matrix::Zero(p.tensor.rows(), p.tensor.cols()));
    s.second_moment.push_back(Matrix::Zero(p.tensor.rows(), p.tensor.cols()));
  }
  return s;
}

void adam_step(const ParamList& params, AdamState& state) {
  if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam_step: state built for a different parameter list");
  }
  for (const auto& p : params) {
    if (p.tensor.has_grad() && !p.tensor.node()->grad.allFinite()) {
      throw NumericError("training diverged: non-finite gradient for parameter '" + p.name + "'");
    }
  }

  const AdamOptions& o = state.options;
  ++state.step_count;
  const auto t = static_cast<Scalar>(state.step_count);
  const Scalar bias1 = 1.0 - std::pow(o.beta1, t);
  const Scalar bias2 = 1.0 - std::pow(o.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor param = params[i].tensor;
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    if (m.rows() != param.rows() || m.cols() != param.cols()) {
      throw DimensionError("adam_step: moment shape mismatch for '" + params[i].name + "'");
    }
    // A parameter with an all-zero gradient is left exactly as it is,
    // moments included.
    if (!param.has_grad() || param.node()->grad.isZero(0.0)) continue;
    const Matrix& g = param.node()->grad;
    m = o.beta1 * m + (1.0 - o.beta1) * g;
    v = o.beta2 * v + (1.0 - o.beta2) * g.cwiseProduct(g);
    param.mutable_value().array() -=
        o.lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + o.eps);
  }
}

Scalar clip_grad_norm(const ParamList& params, Scalar max_norm) {
  Scalar sq = 0.0;
  for (const auto& p : params) {
    if (p.tensor.has_grad()) sq += p.tensor.node()->grad.squaredNorm();
  }
  const Scalar norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const Scalar factor = max_norm / norm;
    for (const auto& p : params) {
      if (p.tensor.has_grad()) p.tensor.node()->grad *= factor;
    }
  }
  return norm;
}

}  // namespace chronovae

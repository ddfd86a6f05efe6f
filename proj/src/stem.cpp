#include "chronovae/stem.hpp"

#include <cmath>

namespace chronovae {

StemParams make_stem(const ModelConfig& cfg, Rng& rng) {
  const Index d = cfg.embed_dim;
  const Index k = cfg.stem_kernel;
  const Scalar bound = 1.0 / std::sqrt(static_cast<Scalar>(k));  // fan_in = C_in * K
  StemParams p;
  p.kernel = k;
  p.dropout_p = cfg.dropout_p;
  Matrix w(d, k);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
  Matrix b(1, d);
  for (Index i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-bound, bound);
  Matrix pos(cfg.max_len, d);
  for (Index i = 0; i < pos.size(); ++i) pos.data()[i] = rng.normal(0.0, 0.02);
  p.conv_weight = Tensor(std::move(w), true);
  p.conv_bias = Tensor(std::move(b), true);
  p.positions = Tensor(std::move(pos), true);
  return p;
}

Tensor stem_forward(const Tensor& x, const StemParams& p, bool training, Rng& rng) {
  if (x.cols() != 1) throw DimensionError("stem_forward: expected an L x 1 series");
  if (x.rows() > p.positions.rows()) {
    throw DimensionError("sequence too long: L=" + std::to_string(x.rows()) +
                         " exceeds L_max=" + std::to_string(p.positions.rows()));
  }
  Tensor features = gelu(conv1d_same(x, p.conv_weight, p.conv_bias, p.kernel, (p.kernel - 1) / 2));
  Tensor h = features + slice_rows(p.positions, 0, x.rows());
  return dropout(h, p.dropout_p, training, rng);
}

void collect(const std::string& prefix, const StemParams& p, ParamList& out) {
  out.push_back({prefix + ".conv.weight", p.conv_weight});
  out.push_back({prefix + ".conv.bias", p.conv_bias});
  out.push_back({prefix + ".positions", p.positions});
}

}  // namespace chronovae

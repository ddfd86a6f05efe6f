#pragma once

#include "chronovae/config.hpp"
#include "chronovae/layers.hpp"

namespace chronovae {

/// Convolutional projection L x 1 -> L x D with learnable positions.
struct StemParams {
  Tensor conv_weight;  // D x (1 * K)
  Tensor conv_bias;    // 1 x D
  Tensor positions;    // L_max x D, the leading unit axis dropped
  Index kernel = 7;
  Scalar dropout_p = 0.1;
};

/// Kaiming-uniform conv weights, N(0, 0.02^2) positions.
StemParams make_stem(const ModelConfig& cfg, Rng& rng);

/// dropout(gelu(conv(x)) + positions[:L]). Throws DimensionError when L
/// exceeds the positional table.
Tensor stem_forward(const Tensor& x, const StemParams& p, bool training, Rng& rng);

void collect(const std::string& prefix, const StemParams& p, ParamList& out);

}  // namespace chronovae

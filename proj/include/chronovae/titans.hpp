#pragma once

#include <functional>
#include <vector>

#include "chronovae/config.hpp"
#include "chronovae/layers.hpp"

namespace chronovae {

struct TitansSettings {
  Index chunk = 32;
  Scalar alpha = 0.99;
  Scalar eta = 0.01;
  Scalar clamp = 5.0;

  static TitansSettings from(const ModelConfig& cfg);
};

/// Slow weights: learned by backprop, fixed within a forward pass.
struct TitansParams {
  Mlp slow_key;
  Mlp slow_value;
  Mlp slow_main;
  Linear out_proj;
};

/// Fast weights of one sequence. Rebuilt from zero for every forward pass.
struct TitansState {
  Matrix key;    // M_k
  Matrix value;  // M_v
  Matrix main;   // M_main
  Index chunk_cursor = 0;

  static TitansState zeros(Index dim);
};

/// The fast-weight state each chunk read, in chunk order. Recording one pass
/// and replaying it into another holds the memory trajectory fixed, which is
/// how finite differences see the same function autodiff differentiates.
struct FastWeightTrace {
  std::vector<TitansState> chunk_entry;
};

struct TitansHooks {
  FastWeightTrace* record = nullptr;
  const FastWeightTrace* replay = nullptr;
  /// Called after each chunk's update with the chunk index and new state.
  std::function<void(Index, const TitansState&)> after_update;
};

/// Out_proj is zero so a fresh block contributes nothing to its residual.
TitansParams make_titans(Index dim, Rng& rng);

/// One stabilized delta-rule step on the chunk objective
/// mean_t ||M_main k_t - v_t||^2 with k_t = (I + M_k) s_k,t and
/// v_t = (I + M_v) s_v,t. Rows of the inputs are tokens. Every matrix is
/// updated from the same entry state: M <- clamp(alpha M - eta grad).
TitansState dgd_update(const TitansState& state, const Matrix& slow_key, const Matrix& slow_value,
                       const TitansSettings& settings);

/// Chunked fast-weight retrieval over precomputed slow projections (L x D).
/// Within a chunk every token reads the entry state:
///   y_t = M_main (I + M_k) s_k,t + s_main,t.
/// Gradients flow to the slow projections only.
Tensor fast_weight_memory(const Tensor& slow_key, const Tensor& slow_value, const Tensor& slow_main,
                          const TitansSettings& settings, const TitansHooks& hooks = {});

/// out_proj(fast_weight_memory(slow MLPs(x))).
Tensor titans_forward(const Tensor& x, const TitansParams& p, const TitansSettings& settings,
                      const TitansHooks& hooks = {});

void collect(const std::string& prefix, const TitansParams& p, ParamList& out);

}  // namespace chronovae

#pragma once

#include <cstdint>
#include <vector>

#include "chronovae/layers.hpp"

namespace chronovae {

struct AdamOptions {
  Scalar lr = 1e-3;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar eps = 1e-8;
};

/// Moment buffers for one parameter list, aligned by index.
struct AdamState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::uint64_t step_count = 0;
  AdamOptions options;
};

AdamState make_adam(const ParamList& params, AdamOptions options = {});

/// One bias-corrected Adam step using each parameter's accumulated gradient.
/// A non-finite gradient throws NumericError naming the parameter and leaves
/// every parameter untouched.
void adam_step(const ParamList& params, AdamState& state);

/// Rescales all gradients so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
Scalar clip_grad_norm(const ParamList& params, Scalar max_norm);

}  // namespace chronovae

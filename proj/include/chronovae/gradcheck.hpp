#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "chronovae/config.hpp"
#include "chronovae/tensor.hpp"

namespace chronovae {

struct GradCheckResult {
  std::string name;
  Scalar max_rel_err = 0.0;
  bool passed = false;
};

using TensorFn = std::function<Tensor(std::span<const Tensor>)>;

/// Compares autodiff against central differences for every input of fn,
/// through the scalar sum(fn(inputs) * R) with a fixed random R.
GradCheckResult check_gradient(const std::string& name, const TensorFn& fn,
                               const std::vector<Matrix>& inputs, Scalar tol, std::uint64_t seed,
                               Scalar h = 1e-5);

/// One check per differentiable operation. With inject_fault an op whose
/// backward is deliberately wrong is appended.
std::vector<GradCheckResult> op_gradient_suite(Scalar tol = 1e-4, std::uint64_t seed = 0,
                                               bool inject_fault = false);

/// Small model used by the end-to-end check.
ModelConfig gradcheck_model_config();

/// Total training loss of one masked series against autodiff, on n_params
/// randomly sampled parameter entries. Zero-initialized tensors are
/// randomized first so every path carries gradient; the fast-weight
/// trajectory and the dropout/sampling noise are pinned across evaluations.
GradCheckResult end_to_end_gradient_check(const ModelConfig& cfg, int n_params, Scalar tol,
                                          std::uint64_t seed);

}  // namespace chronovae

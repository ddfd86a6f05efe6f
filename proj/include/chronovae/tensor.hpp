#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "chronovae/error.hpp"

namespace chronovae {

using Scalar = double;
using Index = Eigen::Index;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

namespace detail {

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  template <typename Derived>
  void accumulate(const Eigen::MatrixBase<Derived>& g) {
    if (grad.size() == 0) {
      grad = g;
    } else {
      grad += g;
    }
  }
};

}  // namespace detail

/// Handle to a node of the reverse-mode graph. Copies share the node, so a
/// parameter tensor held in several places is one parameter.
///
/// Every tensor is a rank-2 row-major matrix; vectors are 1xN rows and
/// scalars 1x1. Higher-rank layouts (conv kernels, positional tables) are
/// flattened by their owners.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Matrix value, bool requires_grad = false);

  static Tensor zeros(Index rows, Index cols, bool requires_grad = false);
  static Tensor constant(Index rows, Index cols, Scalar v);
  static Tensor scalar(Scalar v);

  bool defined() const { return node_ != nullptr; }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  Index size() const { return node_->value.size(); }
  std::array<Index, 2> shape() const { return {rows(), cols()}; }

  const Matrix& value() const { return node_->value; }
  /// In-place access for optimizers and initializers only.
  Matrix& mutable_value() { return node_->value; }
  Scalar item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->grad.size() != 0; }
  /// Accumulated gradient; a zero matrix when nothing has flowed in yet.
  Matrix grad() const;
  void zero_grad() { node_->grad.resize(0, 0); }

  /// Reverse sweep from a 1x1 tensor. Gradients accumulate into leaves.
  void backward() const;

  /// Same value, cut from the graph.
  Tensor detach() const { return Tensor(node_->value, false); }

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend Tensor make_result(Matrix, std::vector<Tensor>, std::function<void(detail::Node&)>);

  std::shared_ptr<detail::Node> node_;
};

bool grad_enabled();

/// Disables graph construction on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Builds an op result. The backward closure is kept only if some input
/// requires a gradient and grad mode is on.
Tensor make_result(Matrix value, std::vector<Tensor> inputs,
                   std::function<void(detail::Node&)> backward);

bool all_finite(const Matrix& m);
/// Throws NumericError mentioning `what` if any entry is NaN/Inf.
void check_finite(const Matrix& m, const std::string& what);

}  // namespace chronovae

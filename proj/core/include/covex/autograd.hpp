#ifndef COVEX_AUTOGRAD_HPP
#define COVEX_AUTOGRAD_HPP

// Minimal reverse-mode automatic differentiation over dense double matrices.
//
// Every op records its parents and a closure that pushes the node's gradient
// back into them. Sequences are laid out one token per row, so most ops are
// row-wise (softmax_rows, layer_norm_rows, add_row).

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace covex {
class Rng;
}

namespace covex::ag {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void accumulate(const Matrix& delta);
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_->requires_grad; }
  double scalar() const { return node_->value(0, 0); }
  bool valid() const { return static_cast<bool>(node_); }

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

  void zero_grad() { node_->grad.resize(0, 0); }

 private:
  std::shared_ptr<Node> node_;
};

// Disables graph construction on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

Var constant(Matrix value);
Var leaf(Matrix value);  // trainable

Var matmul(const Var& a, const Var& b);
Var matmul_nt(const Var& a, const Var& b);  // a * b^T
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
// b is 1 x cols(a) (added to every row) or 1 x 1 (added everywhere).
Var add_broadcast(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var tanh(const Var& a);
Var leaky_relu(const Var& a, double negative_slope);
Var gelu(const Var& a);
Var softmax_rows(const Var& a);
Var layer_norm_rows(const Var& a, const Var& gamma, const Var& beta, double eps);
Var gather_rows(const Var& table, std::span<const int> ids);
Var slice_rows(const Var& a, Eigen::Index begin, Eigen::Index count);
Var slice_cols(const Var& a, Eigen::Index begin, Eigen::Index count);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
// Inverted dropout; identity when rate == 0 or rng is null.
Var dropout(const Var& a, double rate, Rng* rng);
// Softmax cross entropy of a 1 x k logit row against a class index. 1 x 1.
Var cross_entropy(const Var& logits, int label);
Var sum(std::span<const Var> scalars);

// Seeds d(root)/d(root) = 1 and runs the recorded closures in reverse
// topological order. Leaf gradients accumulate across calls.
void backward(const Var& root);

}  // namespace covex::ag

#endif  // COVEX_AUTOGRAD_HPP

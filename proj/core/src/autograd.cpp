#include "covex/autograd.hpp"

#include <cmath>
#include <unordered_set>

#include "covex/error.hpp"
#include "covex/rng.hpp"

namespace covex::ag {

namespace {

thread_local bool g_grad_enabled = true;

void require(bool condition, const char* op, const std::string& detail) {
  if (!condition) throw ShapeError(std::string(op) + ": " + detail);
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Var make(Matrix value, std::vector<std::shared_ptr<Node>> parents,
         std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) needs = needs || p->requires_grad;
  }
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

}  // namespace

void Node::accumulate(const Matrix& delta) {
  if (!requires_grad) return;
  if (grad.size() == 0) {
    grad = delta;
  } else {
    grad += delta;
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Var constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var leaf(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

Var matmul(const Var& a, const Var& b) {
  require(a.cols() == b.rows(), "matmul", shape(a.value()) + " * " + shape(b.value()));
  return make(a.value() * b.value(), {a.shared(), b.shared()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) pa.accumulate(self.grad * pb.value.transpose());
    if (pb.requires_grad) pb.accumulate(pa.value.transpose() * self.grad);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  require(a.cols() == b.cols(), "matmul_nt", shape(a.value()) + " * " + shape(b.value()) + "^T");
  return make(a.value() * b.value().transpose(), {a.shared(), b.shared()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) pa.accumulate(self.grad * pb.value);
    if (pb.requires_grad) pb.accumulate(self.grad.transpose() * pa.value);
  });
}

Var transpose(const Var& a) {
  return make(a.value().transpose(), {a.shared()},
              [](Node& self) { self.parents[0]->accumulate(self.grad.transpose()); });
}

Var add(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add",
          shape(a.value()) + " + " + shape(b.value()));
  return make(a.value() + b.value(), {a.shared(), b.shared()}, [](Node& self) {
    self.parents[0]->accumulate(self.grad);
    self.parents[1]->accumulate(self.grad);
  });
}

Var add_broadcast(const Var& a, const Var& b) {
  require(b.rows() == 1 && (b.cols() == a.cols() || b.cols() == 1), "add_broadcast",
          shape(a.value()) + " + " + shape(b.value()));
  Matrix out = a.value();
  if (b.cols() == 1) {
    out.array() += b.value()(0, 0);
  } else {
    out.rowwise() += b.value().row(0);
  }
  return make(std::move(out), {a.shared(), b.shared()}, [](Node& self) {
    self.parents[0]->accumulate(self.grad);
    Node& pb = *self.parents[1];
    if (!pb.requires_grad) return;
    if (pb.value.cols() == 1) {
      pb.accumulate(Matrix::Constant(1, 1, self.grad.sum()));
    } else {
      pb.accumulate(self.grad.colwise().sum());
    }
  });
}

Var hadamard(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "hadamard",
          shape(a.value()) + " .* " + shape(b.value()));
  return make(a.value().cwiseProduct(b.value()), {a.shared(), b.shared()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) pa.accumulate(self.grad.cwiseProduct(pb.value));
    if (pb.requires_grad) pb.accumulate(self.grad.cwiseProduct(pa.value));
  });
}

Var scale(const Var& a, double factor) {
  return make(a.value() * factor, {a.shared()},
              [factor](Node& self) { self.parents[0]->accumulate(self.grad * factor); });
}

Var tanh(const Var& a) {
  Matrix y = a.value().array().tanh().matrix();
  return make(y, {a.shared()}, [](Node& self) {
    const auto& y = self.value.array();
    self.parents[0]->accumulate((self.grad.array() * (1.0 - y * y)).matrix());
  });
}

Var leaky_relu(const Var& a, double negative_slope) {
  Matrix y = a.value().unaryExpr([negative_slope](double x) { return x > 0 ? x : negative_slope * x; });
  return make(std::move(y), {a.shared()}, [negative_slope](Node& self) {
    const Matrix& x = self.parents[0]->value;
    Matrix slope = x.unaryExpr([negative_slope](double v) { return v > 0 ? 1.0 : negative_slope; });
    self.parents[0]->accumulate(self.grad.cwiseProduct(slope));
  });
}

Var gelu(const Var& a) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  Matrix y = a.value().unaryExpr([](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); });
  return make(std::move(y), {a.shared()}, [](Node& self) {
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    const Matrix& x = self.parents[0]->value;
    Matrix d = x.unaryExpr([](double v) {
      return 0.5 * (1.0 + std::erf(v * kInvSqrt2)) + v * kInvSqrt2Pi * std::exp(-0.5 * v * v);
    });
    self.parents[0]->accumulate(self.grad.cwiseProduct(d));
  });
}

Var softmax_rows(const Var& a) {
  Matrix y = a.value();
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double m = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - m).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  return make(std::move(y), {a.shared()}, [](Node& self) {
    const Matrix& y = self.value;
    Matrix dx(y.rows(), y.cols());
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double dot = self.grad.row(r).dot(y.row(r));
      dx.row(r) = y.row(r).cwiseProduct((self.grad.row(r).array() - dot).matrix());
    }
    self.parents[0]->accumulate(dx);
  });
}

Var layer_norm_rows(const Var& a, const Var& gamma, const Var& beta, double eps) {
  const Eigen::Index n = a.cols();
  require(gamma.rows() == 1 && gamma.cols() == n && beta.rows() == 1 && beta.cols() == n,
          "layer_norm_rows", "gamma/beta must be 1x" + std::to_string(n));
  Matrix normed(a.rows(), n);
  Eigen::VectorXd inv_std(a.rows());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double mean = a.value().row(r).mean();
    const auto centered = (a.value().row(r).array() - mean).matrix();
    const double var = centered.squaredNorm() / static_cast<double>(n);
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    normed.row(r) = centered * inv_std(r);
  }
  Matrix y = normed.array().rowwise() * gamma.value().row(0).array();
  y.rowwise() += beta.value().row(0);
  return make(std::move(y), {a.shared(), gamma.shared(), beta.shared()},
              [normed, inv_std](Node& self) {
                Node& px = *self.parents[0];
                Node& pg = *self.parents[1];
                Node& pb = *self.parents[2];
                if (pg.requires_grad) pg.accumulate(self.grad.cwiseProduct(normed).colwise().sum());
                if (pb.requires_grad) pb.accumulate(self.grad.colwise().sum());
                if (!px.requires_grad) return;
                const double n = static_cast<double>(normed.cols());
                Matrix dnormed = self.grad.array().rowwise() * pg.value.row(0).array();
                Matrix dx(normed.rows(), normed.cols());
                for (Eigen::Index r = 0; r < normed.rows(); ++r) {
                  const double mean_d = dnormed.row(r).sum() / n;
                  const double mean_dn = dnormed.row(r).dot(normed.row(r)) / n;
                  dx.row(r) = inv_std(r) * (dnormed.row(r).array() - mean_d -
                                            normed.row(r).array() * mean_dn)
                                               .matrix();
                }
                px.accumulate(dx);
              });
}

Var gather_rows(const Var& table, std::span<const int> ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] >= 0 && ids[i] < table.rows(), "gather_rows",
            "id " + std::to_string(ids[i]) + " outside table of " + std::to_string(table.rows()));
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return make(std::move(out), {table.shared()}, [idx](Node& self) {
    Node& pt = *self.parents[0];
    Matrix d = Matrix::Zero(pt.value.rows(), pt.value.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) d.row(idx[i]) += self.grad.row(static_cast<Eigen::Index>(i));
    pt.accumulate(d);
  });
}

Var slice_rows(const Var& a, Eigen::Index begin, Eigen::Index count) {
  require(begin >= 0 && count >= 0 && begin + count <= a.rows(), "slice_rows",
          "[" + std::to_string(begin) + ", +" + std::to_string(count) + ") of " + shape(a.value()));
  return make(a.value().middleRows(begin, count), {a.shared()}, [begin, count](Node& self) {
    Node& pa = *self.parents[0];
    Matrix d = Matrix::Zero(pa.value.rows(), pa.value.cols());
    d.middleRows(begin, count) = self.grad;
    pa.accumulate(d);
  });
}

Var slice_cols(const Var& a, Eigen::Index begin, Eigen::Index count) {
  require(begin >= 0 && count >= 0 && begin + count <= a.cols(), "slice_cols",
          "[" + std::to_string(begin) + ", +" + std::to_string(count) + ") of " + shape(a.value()));
  return make(a.value().middleCols(begin, count), {a.shared()}, [begin, count](Node& self) {
    Node& pa = *self.parents[0];
    Matrix d = Matrix::Zero(pa.value.rows(), pa.value.cols());
    d.middleCols(begin, count) = self.grad;
    pa.accumulate(d);
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == parts[0].rows(), "concat_cols", "row mismatch");
    cols += p.cols();
  }
  Matrix out(parts[0].rows(), cols);
  std::vector<std::shared_ptr<Node>> parents;
  std::vector<Eigen::Index> widths;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
    parents.push_back(p.shared());
    widths.push_back(p.cols());
  }
  return make(std::move(out), std::move(parents), [widths](Node& self) {
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      self.parents[i]->accumulate(self.grad.middleCols(at, widths[i]));
      at += widths[i];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows", "no inputs");
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    require(p.cols() == parts[0].cols(), "concat_rows", "column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, parts[0].cols());
  std::vector<std::shared_ptr<Node>> parents;
  std::vector<Eigen::Index> heights;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
    parents.push_back(p.shared());
    heights.push_back(p.rows());
  }
  return make(std::move(out), std::move(parents), [heights](Node& self) {
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < heights.size(); ++i) {
      self.parents[i]->accumulate(self.grad.middleRows(at, heights[i]));
      at += heights[i];
    }
  });
}

Var dropout(const Var& a, double rate, Rng* rng) {
  if (rng == nullptr || rate <= 0.0) return a;
  const double keep = 1.0 - rate;
  Matrix mask(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng->uniform() < keep ? 1.0 / keep : 0.0;
  }
  return make(a.value().cwiseProduct(mask), {a.shared()}, [mask](Node& self) {
    self.parents[0]->accumulate(self.grad.cwiseProduct(mask));
  });
}

Var cross_entropy(const Var& logits, int label) {
  require(logits.rows() == 1, "cross_entropy", "expects a single logit row, got " + shape(logits.value()));
  if (label < 0 || label >= logits.cols()) {
    throw PreconditionError("cross_entropy: label " + std::to_string(label) + " outside " +
                            std::to_string(logits.cols()) + " classes");
  }
  const auto& z = logits.value();
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  Matrix probs = (z.array() - lse).exp().matrix();
  return make(Matrix::Constant(1, 1, lse - z(0, label)), {logits.shared()},
              [probs, label](Node& self) {
                Matrix d = probs;
                d(0, label) -= 1.0;
                self.parents[0]->accumulate(d * self.grad(0, 0));
              });
}

Var sum(std::span<const Var> scalars) {
  require(!scalars.empty(), "sum", "no inputs");
  double total = 0.0;
  std::vector<std::shared_ptr<Node>> parents;
  for (const auto& s : scalars) {
    require(s.rows() == 1 && s.cols() == 1, "sum", "inputs must be 1x1");
    total += s.scalar();
    parents.push_back(s.shared());
  }
  return make(Matrix::Constant(1, 1, total), std::move(parents), [](Node& self) {
    for (auto& p : self.parents) p->accumulate(self.grad);
  });
}

void backward(const Var& root) {
  require(root.rows() == 1 && root.cols() == 1, "backward", "root must be 1x1");
  if (!root.requires_grad()) return;

  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node(), 0}};
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && node->grad.size() != 0) node->backward(*node);
  }
}

}  // namespace covex::ag

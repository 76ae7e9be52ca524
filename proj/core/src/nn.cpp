#include "covex/nn.hpp"

#include <cmath>

#include "covex/error.hpp"

namespace covex {

ag::Var ParameterStore::add(std::string name, ag::Matrix init) {
  if (find(name) != nullptr) throw ModelError("duplicate parameter '" + name + "'");
  ag::Var var = ag::leaf(std::move(init));
  entries_.emplace_back(std::move(name), var);
  return var;
}

void ParameterStore::adopt(const std::string& prefix, const ParameterStore& other) {
  for (const auto& [name, var] : other.entries()) {
    const std::string full = prefix + name;
    if (find(full) != nullptr) throw ModelError("duplicate parameter '" + full + "'");
    entries_.emplace_back(full, var);
  }
}

const ag::Var* ParameterStore::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return &e.second;
  }
  return nullptr;
}

const ag::Var& ParameterStore::at(std::string_view name) const {
  const ag::Var* v = find(name);
  if (v == nullptr) throw ModelError("unknown parameter '" + std::string(name) + "'");
  return *v;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += static_cast<std::size_t>(e.second.value().size());
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

namespace init {

ag::Matrix normal(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  ag::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * rng.normal();
  return m;
}

ag::Matrix fan_in_uniform(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  ag::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * rng.uniform() - 1.0) * bound;
  return m;
}

}  // namespace init

Linear Linear::create(ParameterStore& store, const std::string& name, Eigen::Index in,
                      Eigen::Index out, std::uint64_t seed) {
  Rng w_rng = Rng::derive(seed, name + ".weight");
  Rng b_rng = Rng::derive(seed, name + ".bias");
  Linear l;
  l.weight = store.add(name + ".weight", init::fan_in_uniform(in, out, in, w_rng));
  l.bias = store.add(name + ".bias", init::fan_in_uniform(1, out, in, b_rng));
  return l;
}

ag::Var Linear::operator()(const ag::Var& x) const {
  return ag::add_broadcast(ag::matmul(x, weight), bias);
}

Mlp Mlp::create(ParameterStore& store, const std::string& name, Eigen::Index in,
                Eigen::Index hidden_size, Eigen::Index out, Activation activation,
                double negative_slope, double dropout, std::uint64_t seed) {
  Mlp mlp;
  mlp.hidden = Linear::create(store, name + ".hidden", in, hidden_size, seed);
  mlp.output = Linear::create(store, name + ".output", hidden_size, out, seed);
  mlp.activation = activation;
  mlp.negative_slope = negative_slope;
  mlp.dropout = dropout;
  return mlp;
}

Mlp::Result Mlp::forward(const ag::Var& x, Rng* dropout_rng) const {
  ag::Var pre = hidden(x);
  ag::Var act = activation == Activation::tanh ? ag::tanh(pre) : ag::leaky_relu(pre, negative_slope);
  act = ag::dropout(act, dropout, dropout_rng);
  return {act, output(act)};
}

Adam::Adam(const ParameterStore& store, AdamOptions options) : options_(options) {
  if (!(options.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  for (const auto& [name, var] : store.entries()) {
    params_.push_back(var);
    m_.push_back(ag::Matrix::Zero(var.rows(), var.cols()));
    v_.push_back(ag::Matrix::Zero(var.rows(), var.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ag::Var& p = params_[i];
    if (p.grad().size() == 0) continue;
    // Embedding tables may have grown since construction.
    if (m_[i].rows() != p.rows() || m_[i].cols() != p.cols()) {
      m_[i].conservativeResizeLike(ag::Matrix::Zero(p.rows(), p.cols()));
      v_[i].conservativeResizeLike(ag::Matrix::Zero(p.rows(), p.cols()));
    }
    const ag::Matrix& g = p.grad();
    m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * g;
    v_[i] = options_.beta2 * v_[i] + (1.0 - options_.beta2) * g.cwiseProduct(g);
    p.mutable_value().array() -= options_.learning_rate * (m_[i].array() / bc1) /
                                 ((v_[i].array() / bc2).sqrt() + options_.epsilon);
    p.zero_grad();
  }
}

}  // namespace covex

#ifndef COVEX_NN_HPP
#define COVEX_NN_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "covex/autograd.hpp"
#include "covex/rng.hpp"

namespace covex {

// Ordered registry of named trainable tensors. Modules keep their own Var
// handles; the store shares the same nodes, so updates through either are
// visible to both.
class ParameterStore {
 public:
  using Entry = std::pair<std::string, ag::Var>;

  ag::Var add(std::string name, ag::Matrix init);
  // Registers an existing handle (used to nest a sub-module's parameters).
  void adopt(const std::string& prefix, const ParameterStore& other);

  const ag::Var* find(std::string_view name) const;
  const ag::Var& at(std::string_view name) const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t scalar_count() const;

  void zero_grad();

 private:
  std::vector<Entry> entries_;
};

namespace init {
ag::Matrix normal(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng);
// PyTorch nn.Linear default: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
ag::Matrix fan_in_uniform(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng);
}  // namespace init

// y = x W + b with W stored [in x out].
struct Linear {
  ag::Var weight;
  ag::Var bias;

  static Linear create(ParameterStore& store, const std::string& name, Eigen::Index in,
                       Eigen::Index out, std::uint64_t seed);
  ag::Var operator()(const ag::Var& x) const;
};

enum class Activation { tanh, leaky_relu };

// One hidden layer perceptron: out = L2(dropout(act(L1 x))).
struct Mlp {
  Linear hidden;
  Linear output;
  Activation activation = Activation::tanh;
  double negative_slope = 0.0;
  double dropout = 0.0;

  struct Result {
    ag::Var hidden;  // post-activation (post-dropout in training)
    ag::Var output;
  };

  static Mlp create(ParameterStore& store, const std::string& name, Eigen::Index in,
                    Eigen::Index hidden_size, Eigen::Index out, Activation activation,
                    double negative_slope, double dropout, std::uint64_t seed);
  Result forward(const ag::Var& x, Rng* dropout_rng) const;
};

struct AdamOptions {
  double learning_rate = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(const ParameterStore& store, AdamOptions options);
  // Applies one update from the accumulated gradients, then clears them.
  void step();
  std::int64_t steps() const { return t_; }

 private:
  std::vector<ag::Var> params_;
  std::vector<ag::Matrix> m_;
  std::vector<ag::Matrix> v_;
  AdamOptions options_;
  std::int64_t t_ = 0;
};

}  // namespace covex

#endif  // COVEX_NN_HPP

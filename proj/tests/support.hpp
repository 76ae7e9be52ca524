#ifndef COVEX_TESTS_SUPPORT_HPP
#define COVEX_TESTS_SUPPORT_HPP

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "covex/autograd.hpp"
#include "covex/encoder.hpp"
#include "covex/rng.hpp"
#include "covex/tokenizer.hpp"

namespace covex::test {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "covex") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline EncoderConfig tiny_config(std::uint64_t seed = 7, double dropout = 0.0) {
  EncoderConfig c;
  c.variant = EncoderVariant::tiny_test;
  c.seed = seed;
  c.dropout = dropout;
  return c;
}

inline Encoder tiny_encoder(const std::vector<std::string>& texts, std::uint64_t seed = 7,
                            double dropout = 0.0) {
  return Encoder::create(tiny_config(seed, dropout), build_vocabulary(texts, true));
}

inline ag::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  ag::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  }
  return m;
}

// Largest relative error between the analytic gradient of `param` and a
// central difference of `loss`, over every entry of `param`.
inline double gradient_error(ag::Var param, const std::function<ag::Var()>& loss, double h = 1e-5) {
  param.zero_grad();
  ag::Var l = loss();
  ag::backward(l);
  const ag::Matrix analytic = param.grad();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < param.rows(); ++i) {
    for (Eigen::Index j = 0; j < param.cols(); ++j) {
      double& x = param.mutable_value()(i, j);
      const double saved = x;
      x = saved + h;
      const double up = loss().scalar();
      x = saved - h;
      const double down = loss().scalar();
      x = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.size() == 0 ? 0.0 : analytic(i, j);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace covex::test

#endif  // COVEX_TESTS_SUPPORT_HPP

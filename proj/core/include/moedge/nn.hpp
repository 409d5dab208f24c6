#pragma once

#include <Eigen/Dense>
#include <vector>

#include "moedge/common.hpp"
#include "moedge/rng.hpp"

namespace moedge {

inline double softplus(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Fully connected network with tanh hidden activations and a linear output,
/// parameters packed flat as [W0, b0, W1, b1, ...] (column-major blocks).
struct MlpArch {
  std::vector<int> layer_sizes;  // {in, hidden..., out}

  int param_count() const {
    int n = 0;
    for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i)
      n += layer_sizes[i + 1] * layer_sizes[i] + layer_sizes[i + 1];
    return n;
  }
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
};

class Mlp {
 public:
  explicit Mlp(MlpArch arch);

  /// Glorot-uniform weights, zero biases.
  void init(Rng& rng);

  /// Rows of `inputs` are samples; returns one output row per sample.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;

  /// Mean over samples of the squared error summed over output dims;
  /// accumulates dLoss/dparams into `grad` (must be zero-initialized by the
  /// caller if a fresh gradient is wanted).
  double mse_with_gradient(const Eigen::MatrixXd& inputs,
                           const Eigen::MatrixXd& targets,
                           Eigen::VectorXd& grad) const;

  Eigen::VectorXd& params() { return theta_; }
  const Eigen::VectorXd& params() const { return theta_; }
  const MlpArch& arch() const { return arch_; }

 private:
  MlpArch arch_;
  Eigen::VectorXd theta_;
};

/// Adam over a flat parameter vector.
class Adam {
 public:
  Adam(int dim, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  Eigen::VectorXd m_, v_;
};

}  // namespace moedge

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "moedge/common.hpp"

namespace moedge {

/// One LSTM layer plus a dense readout from the final hidden state.
struct LstmArch {
  int input_size = 1;
  int hidden_size = 50;
  int output_size = 12;  // = L_pred
  int layers = 1;

  void validate() const {
    if (input_size < 1 || hidden_size < 1 || output_size < 1 || layers != 1)
      throw ValidationError("LSTM sizes must be positive (single layer)");
  }
  /// Flat layout: [Wx (4h x in), Wh (4h x h), b (4h), V (out x h), c (out)],
  /// gate row order i, f, g, o.
  int param_count() const {
    const int h = hidden_size;
    return 4 * h * input_size + 4 * h * h + 4 * h + output_size * h + output_size;
  }
};

/// Intermediates of one forward pass, kept for exact backpropagation
/// through time.
struct LstmTape {
  std::vector<Eigen::MatrixXd> gates;   // per step: batch x 4h (i,f,g,o post-activation)
  std::vector<Eigen::MatrixXd> cell;    // per step: batch x h (c_t)
  std::vector<Eigen::MatrixXd> cell_tanh;  // per step: tanh(c_t)
  std::vector<Eigen::MatrixXd> hidden;  // h_0 .. h_T (T+1 entries)
};

/// Stateless compute kernel over a flat parameter vector; the variational
/// and point trainers own the parameters.
class LstmKernel {
 public:
  explicit LstmKernel(LstmArch arch);

  const LstmArch& arch() const { return arch_; }

  /// `sequence` is batch x (steps * input_size), step-major.  Returns the
  /// dense readout of the final hidden state, batch x output_size.
  Eigen::MatrixXd forward(const Eigen::VectorXd& theta,
                          const Eigen::MatrixXd& sequence,
                          LstmTape* tape = nullptr) const;

  /// Adds dLoss/dtheta into `grad` given dLoss/dOutput.
  void backward(const Eigen::VectorXd& theta, const Eigen::MatrixXd& sequence,
                const LstmTape& tape, const Eigen::MatrixXd& grad_output,
                Eigen::VectorXd& grad) const;

 private:
  LstmArch arch_;
};

}  // namespace moedge

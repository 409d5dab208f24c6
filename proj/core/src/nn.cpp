#include "moedge/nn.hpp"

#include <cmath>

namespace moedge {
namespace {

// Views of one layer's weight matrix and bias inside the flat vector.
struct LayerView {
  Eigen::Map<const Eigen::MatrixXd> w;  // out x in
  Eigen::Map<const Eigen::VectorXd> b;  // out
};

LayerView layer_view(const Eigen::VectorXd& theta, const MlpArch& arch,
                     std::size_t layer, int offset) {
  const int in = arch.layer_sizes[layer];
  const int out = arch.layer_sizes[layer + 1];
  return {Eigen::Map<const Eigen::MatrixXd>(theta.data() + offset, out, in),
          Eigen::Map<const Eigen::VectorXd>(theta.data() + offset + out * in, out)};
}

}  // namespace

Mlp::Mlp(MlpArch arch) : arch_(std::move(arch)) {
  if (arch_.layer_sizes.size() < 2)
    throw ValidationError("MLP needs at least input and output layers");
  for (int s : arch_.layer_sizes)
    if (s < 1) throw ValidationError("MLP layer sizes must be positive");
  theta_ = Eigen::VectorXd::Zero(arch_.param_count());
}

void Mlp::init(Rng& rng) {
  int offset = 0;
  for (std::size_t l = 0; l + 1 < arch_.layer_sizes.size(); ++l) {
    const int in = arch_.layer_sizes[l];
    const int out = arch_.layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / (in + out));
    for (int i = 0; i < out * in; ++i)
      theta_[offset + i] = rng.uniform(-bound, bound);
    offset += out * in + out;  // biases stay zero
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs) const {
  if (inputs.cols() != arch_.input_size())
    throw ValidationError("MLP input width mismatch");
  Eigen::MatrixXd a = inputs;
  int offset = 0;
  for (std::size_t l = 0; l + 1 < arch_.layer_sizes.size(); ++l) {
    const auto [w, b] = layer_view(theta_, arch_, l, offset);
    offset += static_cast<int>(w.size() + b.size());
    a = (a * w.transpose()).rowwise() + b.transpose();
    if (l + 2 < arch_.layer_sizes.size()) a = a.array().tanh();
  }
  return a;
}

double Mlp::mse_with_gradient(const Eigen::MatrixXd& inputs,
                              const Eigen::MatrixXd& targets,
                              Eigen::VectorXd& grad) const {
  const auto num_layers = arch_.layer_sizes.size() - 1;
  const auto n = inputs.rows();
  if (targets.rows() != n || targets.cols() != arch_.output_size())
    throw ValidationError("MLP target shape mismatch");
  if (grad.size() != theta_.size())
    throw ValidationError("gradient buffer size mismatch");

  // Forward, keeping each layer's activation.
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(num_layers + 1);
  acts.push_back(inputs);
  std::vector<int> offsets(num_layers);
  int offset = 0;
  for (std::size_t l = 0; l < num_layers; ++l) {
    offsets[l] = offset;
    const auto [w, b] = layer_view(theta_, arch_, l, offset);
    offset += static_cast<int>(w.size() + b.size());
    Eigen::MatrixXd z = (acts.back() * w.transpose()).rowwise() + b.transpose();
    if (l + 1 < num_layers) z = z.array().tanh();
    acts.push_back(std::move(z));
  }

  const Eigen::MatrixXd residual = acts.back() - targets;
  const double loss = residual.squaredNorm() / static_cast<double>(n);

  Eigen::MatrixXd delta = residual * (2.0 / static_cast<double>(n));
  for (std::size_t l = num_layers; l-- > 0;) {
    const int in = arch_.layer_sizes[l];
    const int out = arch_.layer_sizes[l + 1];
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + offsets[l], out, in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + offsets[l] + out * in, out);
    gw.noalias() += delta.transpose() * acts[l];
    gb += delta.colwise().sum().transpose();
    if (l > 0) {
      const auto [w, b] = layer_view(theta_, arch_, l, offsets[l]);
      (void)b;
      delta = (delta * w).array() * (1.0 - acts[l].array().square());
    }
  }
  return loss;
}

Adam::Adam(int dim, double learning_rate, double beta1, double beta2,
           double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon),
      m_(Eigen::VectorXd::Zero(dim)), v_(Eigen::VectorXd::Zero(dim)) {
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw ValidationError("Adam dimension mismatch");
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double m_scale = 1.0 / (1.0 - std::pow(beta1_, t_));
  const double v_scale = 1.0 / (1.0 - std::pow(beta2_, t_));
  params -= lr_ * (m_ * m_scale).cwiseQuotient(
                      ((v_ * v_scale).cwiseSqrt().array() + eps_).matrix());
}

}  // namespace moedge

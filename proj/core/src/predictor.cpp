#include "moedge/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "moedge/nn.hpp"
#include "moedge/rng.hpp"

namespace moedge {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;

void shuffle_indices(std::vector<int>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng.below(i)]);
}

void fill_batch(const WindowedDataset& data, const std::vector<int>& idx,
                int begin, int count, Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
  x.resize(count, data.input_window);
  y.resize(count, data.horizon);
  for (int i = 0; i < count; ++i) {
    x.row(i) = data.inputs.row(idx[begin + i]);
    y.row(i) = data.labels.row(idx[begin + i]);
  }
}

void check_train_inputs(const WindowedDataset& data, const LstmArch& arch,
                        const TrainConfig& cfg) {
  cfg.validate();
  arch.validate();
  if (data.num_sequences() < 1) throw ValidationError("training dataset is empty");
  if (arch.input_size != 1)
    throw ValidationError("training expects scalar demand input (input_size 1)");
  if (arch.output_size != data.horizon)
    throw ValidationError("arch output_size must equal the dataset horizon");
}

Eigen::VectorXd init_lstm_params(const LstmArch& arch, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(arch.hidden_size));
  Eigen::VectorXd theta(arch.param_count());
  for (int i = 0; i < theta.size(); ++i) theta[i] = rng.uniform(-bound, bound);
  return theta;
}

Eigen::VectorXd softplus_vec(const Eigen::VectorXd& rho) {
  return rho.unaryExpr([](double r) { return softplus(r); });
}

Eigen::VectorXd sigmoid_vec(const Eigen::VectorXd& rho) {
  return rho.unaryExpr([](double r) { return sigmoid(r); });
}

// KL[ q = N(m, diag(sd^2)) || p = N(0, prior_sd^2 I) ], closed form.
double gaussian_kl(const Eigen::VectorXd& mean, const Eigen::VectorXd& sd,
                   double prior_sd) {
  const double p2 = prior_sd * prior_sd;
  double kl = 0.0;
  for (int j = 0; j < mean.size(); ++j)
    kl += std::log(prior_sd / sd[j]) +
          (sd[j] * sd[j] + mean[j] * mean[j]) / (2.0 * p2) - 0.5;
  return kl;
}

}  // namespace

WindowedDataset build_windows(const DemandTrace& trace, int input_window,
                              int horizon) {
  if (input_window < 1 || horizon < 1)
    throw ValidationError("input_window and horizon must be positive");
  const int span = input_window + horizon;
  if (trace.num_steps() < span)
    throw ValidationError("trace too short: need at least " +
                          std::to_string(span) + " steps, have " +
                          std::to_string(trace.num_steps()));
  const int per_cell = trace.num_steps() - span + 1;
  WindowedDataset data;
  data.input_window = input_window;
  data.horizon = horizon;
  data.inputs.resize(per_cell * trace.num_cells(), input_window);
  data.labels.resize(per_cell * trace.num_cells(), horizon);
  data.cell_index.reserve(per_cell * trace.num_cells());
  int row = 0;
  for (int c = 0; c < trace.num_cells(); ++c)
    for (int s = 0; s < per_cell; ++s, ++row) {
      data.inputs.row(row) =
          trace.values.col(c).segment(s, input_window).transpose();
      data.labels.row(row) =
          trace.values.col(c).segment(s + input_window, horizon).transpose();
      data.cell_index.push_back(c);
    }
  return data;
}

PointParams train_point(const WindowedDataset& data, const LstmArch& arch,
                        const TrainConfig& cfg) {
  check_train_inputs(data, arch, cfg);
  const LstmKernel kernel(arch);
  Rng init_rng(derive_seed(cfg.seed, 0));
  Rng shuffle_rng(derive_seed(cfg.seed, 1));

  PointParams out;
  out.arch = arch;
  out.input_window = data.input_window;
  out.theta = init_lstm_params(arch, init_rng);

  Adam adam(static_cast<int>(out.theta.size()), cfg.learning_rate);
  const int n = data.num_sequences();
  const int num_batches = (n + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Eigen::MatrixXd x, y;
  LstmTape tape;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_indices(idx, shuffle_rng);
    double epoch_total = 0.0;
    for (int b = 0; b < num_batches; ++b) {
      const int begin = b * cfg.batch_size;
      const int count = std::min(cfg.batch_size, n - begin);
      fill_batch(data, idx, begin, count, x, y);
      const Eigen::MatrixXd pred = kernel.forward(out.theta, x, &tape);
      const Eigen::MatrixXd residual = pred - y;
      const double denom = static_cast<double>(residual.size());
      const double loss = residual.squaredNorm() / denom;
      if (!std::isfinite(loss))
        throw TrainingError("point training diverged (non-finite loss)", epoch);
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(out.theta.size());
      kernel.backward(out.theta, x, tape, residual * (2.0 / denom), grad);
      adam.step(out.theta, grad);
      epoch_total += loss;
    }
    out.epoch_loss.push_back(epoch_total / num_batches);
  }
  return out;
}

VariationalParams train_variational(const WindowedDataset& data,
                                    const LstmArch& arch,
                                    const TrainConfig& cfg) {
  check_train_inputs(data, arch, cfg);
  const LstmKernel kernel(arch);
  Rng init_rng(derive_seed(cfg.seed, 0));
  Rng shuffle_rng(derive_seed(cfg.seed, 1));
  Rng noise_rng(derive_seed(cfg.seed, 2));

  const int p = arch.param_count();
  // Optimization vector [mean; rho; obs_log_variance].
  Eigen::VectorXd opt(2 * p + 1);
  opt.head(p) = init_lstm_params(arch, init_rng);
  opt.segment(p, p).setConstant(-3.0);
  opt[2 * p] = 0.0;

  Adam adam(2 * p + 1, cfg.learning_rate);
  const int n = data.num_sequences();
  const int num_batches = (n + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);

  VariationalParams out;
  out.arch = arch;
  out.input_window = data.input_window;
  out.prior_sd = cfg.prior_sd;

  Eigen::MatrixXd x, y;
  LstmTape tape;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_indices(idx, shuffle_rng);
    double epoch_total = 0.0;
    for (int b = 0; b < num_batches; ++b) {
      const int begin = b * cfg.batch_size;
      const int count = std::min(cfg.batch_size, n - begin);
      fill_batch(data, idx, begin, count, x, y);

      const auto mean = opt.head(p);
      const auto rho = opt.segment(p, p);
      const double logv = opt[2 * p];
      const double v = std::exp(logv);
      const Eigen::VectorXd sd = softplus_vec(rho);
      const Eigen::VectorXd gate = sigmoid_vec(rho);  // d sd / d rho

      Eigen::VectorXd grad = Eigen::VectorXd::Zero(2 * p + 1);
      double nll_avg = 0.0;
      const double inv_mc = 1.0 / cfg.mc_train_samples;
      for (int s = 0; s < cfg.mc_train_samples; ++s) {
        Eigen::VectorXd eps(p);
        for (int j = 0; j < p; ++j) eps[j] = noise_rng.normal();
        const Eigen::VectorXd theta = mean + sd.cwiseProduct(eps);
        const Eigen::MatrixXd pred = kernel.forward(theta, x, &tape);
        const Eigen::MatrixXd residual = pred - y;
        nll_avg += 0.5 *
                   (residual.squaredNorm() / v +
                    residual.size() * (logv + kLog2Pi)) *
                   inv_mc;
        Eigen::VectorXd g_theta = Eigen::VectorXd::Zero(p);
        kernel.backward(theta, x, tape, residual / v, g_theta);
        grad.head(p) += g_theta * inv_mc;
        grad.segment(p, p) +=
            g_theta.cwiseProduct(eps).cwiseProduct(gate) * inv_mc;
        grad[2 * p] +=
            0.5 * (residual.size() - residual.squaredNorm() / v) * inv_mc;
      }

      const double prior2 = cfg.prior_sd * cfg.prior_sd;
      const double kl_weight = 1.0 / num_batches;
      const double loss =
          gaussian_kl(mean, sd, cfg.prior_sd) * kl_weight + nll_avg;
      grad.head(p) += mean * (kl_weight / prior2);
      grad.segment(p, p) +=
          (sd / prior2 - sd.cwiseInverse()).cwiseProduct(gate) * kl_weight;
      if (!std::isfinite(loss))
        throw TrainingError("variational training diverged (non-finite loss)",
                            epoch);
      adam.step(opt, grad);
      epoch_total += loss;
    }
    out.epoch_loss.push_back(epoch_total);
  }
  out.mean = opt.head(p);
  out.rho = opt.segment(p, p);
  out.obs_log_variance = opt[2 * p];
  return out;
}

namespace {

Eigen::MatrixXd normalized_history(const Normalizer& norm, int cell_index,
                                   const Eigen::VectorXd& history,
                                   int input_window) {
  if (cell_index < 0 || cell_index >= static_cast<int>(norm.offset.size()))
    throw ValidationError("cell index outside normalizer range");
  if (history.size() < 1) throw ValidationError("history must be nonempty");
  if (input_window > 0 && history.size() != input_window)
    throw ValidationError("history length must equal the trained input window");
  Eigen::MatrixXd x(1, history.size());
  for (int i = 0; i < history.size(); ++i)
    x(0, i) = norm.apply_one(cell_index, history[i]);
  return x;
}

}  // namespace

Forecast forecast_from_samples(Eigen::MatrixXd samples) {
  if (samples.rows() < 2)
    throw ValidationError("need at least 2 samples for a sample sd");
  Forecast fc;
  fc.samples = std::move(samples);
  const auto s = fc.samples.rows();
  fc.mean = fc.samples.colwise().mean();
  fc.stddev.resize(fc.samples.cols());
  for (int j = 0; j < fc.samples.cols(); ++j) {
    const double var =
        (fc.samples.col(j).array() - fc.mean[j]).square().sum() /
        static_cast<double>(s - 1);
    fc.stddev[j] = std::sqrt(std::max(0.0, var));
  }
  return fc;
}

Forecast forecast(const VariationalParams& params, const Normalizer& norm,
                  int cell_index, const Eigen::VectorXd& history,
                  int num_samples, std::uint64_t seed) {
  params.arch.validate();
  if (num_samples < 2)
    throw ValidationError("need at least 2 samples for a sample sd");
  const Eigen::MatrixXd x =
      normalized_history(norm, cell_index, history, params.input_window);
  const LstmKernel kernel(params.arch);
  const Eigen::VectorXd sd = softplus_vec(params.rho);
  Rng rng(seed);
  Forecast fc;
  fc.samples.resize(num_samples, params.arch.output_size);
  Eigen::VectorXd eps(params.mean.size());
  for (int s = 0; s < num_samples; ++s) {
    for (int j = 0; j < eps.size(); ++j) eps[j] = rng.normal();
    const Eigen::VectorXd theta = params.mean + sd.cwiseProduct(eps);
    const Eigen::MatrixXd y = kernel.forward(theta, x);
    for (int j = 0; j < y.cols(); ++j)
      fc.samples(s, j) = std::max(0.0, norm.invert_one(cell_index, y(0, j)));
  }
  return forecast_from_samples(std::move(fc.samples));
}

Forecast forecast_point(const PointParams& params, const Normalizer& norm,
                        int cell_index, const Eigen::VectorXd& history) {
  params.arch.validate();
  const Eigen::MatrixXd x =
      normalized_history(norm, cell_index, history, params.input_window);
  const LstmKernel kernel(params.arch);
  const Eigen::MatrixXd y = kernel.forward(params.theta, x);
  Forecast fc;
  fc.samples.resize(1, params.arch.output_size);
  for (int j = 0; j < y.cols(); ++j)
    fc.samples(0, j) = std::max(0.0, norm.invert_one(cell_index, y(0, j)));
  fc.mean = fc.samples.row(0);
  fc.stddev = Eigen::VectorXd::Zero(params.arch.output_size);
  return fc;
}

namespace {

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

GradCheckReport finite_difference_report(
    const Eigen::VectorXd& analytic, Eigen::VectorXd point,
    const std::function<double(const Eigen::VectorXd&)>& loss_fn) {
  constexpr double kStep = 1e-5;
  GradCheckReport report;
  report.param_count = static_cast<int>(point.size());
  for (int j = 0; j < point.size(); ++j) {
    const double saved = point[j];
    point[j] = saved + kStep;
    const double up = loss_fn(point);
    point[j] = saved - kStep;
    const double down = loss_fn(point);
    point[j] = saved;
    const double fd = (up - down) / (2.0 * kStep);
    report.max_rel_error =
        std::max(report.max_rel_error, relative_error(analytic[j], fd));
  }
  return report;
}

}  // namespace

GradCheckReport gradient_check(const LstmArch& arch, GradCheckMode mode,
                               std::uint64_t seed) {
  arch.validate();
  if (arch.hidden_size > 16)
    throw ValidationError("gradient check expects a tiny arch (hidden <= 16)");
  Rng rng(derive_seed(seed, 7));
  const int batch = 6, steps = 5;

  if (mode == GradCheckMode::DenseLinear) {
    // Single linear layer under quadratic loss: central differences are
    // exact up to rounding, so this isolates the dense backward path.
    Mlp mlp(MlpArch{{3, 2}});
    mlp.init(rng);
    Eigen::MatrixXd x(batch, 3), y(batch, 2);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform(-1.0, 1.0);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(mlp.params().size());
    mlp.mse_with_gradient(x, y, grad);
    Mlp probe(mlp.arch());
    auto loss_fn = [&](const Eigen::VectorXd& theta) {
      probe.params() = theta;
      return (probe.forward(x) - y).squaredNorm() / static_cast<double>(batch);
    };
    return finite_difference_report(grad, mlp.params(), loss_fn);
  }

  const LstmKernel kernel(arch);
  const int p = arch.param_count();
  Eigen::MatrixXd x(batch, steps * arch.input_size), y(batch, arch.output_size);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
  for (int i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform(-1.0, 1.0);

  if (mode == GradCheckMode::PointLstm) {
    const Eigen::VectorXd theta0 = init_lstm_params(arch, rng);
    LstmTape tape;
    const Eigen::MatrixXd residual = kernel.forward(theta0, x, &tape) - y;
    const double denom = static_cast<double>(residual.size());
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(p);
    kernel.backward(theta0, x, tape, residual * (2.0 / denom), grad);
    auto loss_fn = [&](const Eigen::VectorXd& theta) {
      return (kernel.forward(theta, x) - y).squaredNorm() / denom;
    };
    return finite_difference_report(grad, theta0, loss_fn);
  }

  // Variational mode: full KL + NLL loss with frozen weight noise.
  const double prior_sd = 1.0;
  Eigen::VectorXd eps(p);
  for (int j = 0; j < p; ++j) eps[j] = rng.normal();
  Eigen::VectorXd opt(2 * p + 1);
  opt.head(p) = init_lstm_params(arch, rng);
  for (int j = 0; j < p; ++j) opt[p + j] = rng.uniform(-3.0, -1.0);
  opt[2 * p] = rng.uniform(-1.0, 1.0);

  auto loss_fn = [&](const Eigen::VectorXd& vec) {
    const auto mean = vec.head(p);
    const Eigen::VectorXd sd = softplus_vec(vec.segment(p, p));
    const double logv = vec[2 * p];
    const Eigen::VectorXd theta = mean + sd.cwiseProduct(eps);
    const Eigen::MatrixXd residual = kernel.forward(theta, x) - y;
    return gaussian_kl(mean, sd, prior_sd) +
           0.5 * (residual.squaredNorm() / std::exp(logv) +
                  residual.size() * (logv + kLog2Pi));
  };

  const auto mean = opt.head(p);
  const auto rho = opt.segment(p, p);
  const double logv = opt[2 * p];
  const double v = std::exp(logv);
  const Eigen::VectorXd sd = softplus_vec(rho);
  const Eigen::VectorXd gate = sigmoid_vec(rho);
  const Eigen::VectorXd theta = mean + sd.cwiseProduct(eps);
  LstmTape tape;
  const Eigen::MatrixXd residual = kernel.forward(theta, x, &tape) - y;
  Eigen::VectorXd g_theta = Eigen::VectorXd::Zero(p);
  kernel.backward(theta, x, tape, residual / v, g_theta);
  Eigen::VectorXd grad(2 * p + 1);
  grad.head(p) = g_theta + mean / (prior_sd * prior_sd);
  grad.segment(p, p) =
      g_theta.cwiseProduct(eps).cwiseProduct(gate) +
      (sd / (prior_sd * prior_sd) - sd.cwiseInverse()).cwiseProduct(gate);
  grad[2 * p] = 0.5 * (residual.size() - residual.squaredNorm() / v);
  return finite_difference_report(grad, opt, loss_fn);
}

}  // namespace moedge

#include "moedge/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "moedge/io.hpp"
#include "moedge/rng.hpp"

namespace moedge {
namespace {

Eigen::Vector4d feature_row(double mu, double sigma, int z, double epsilon) {
  return {mu, sigma, static_cast<double>(z), epsilon};
}

Eigen::MatrixXd standardized(const SurrogateParams& p,
                             const Eigen::MatrixXd& features) {
  return (features.rowwise() - p.feature_mean.transpose()).array().rowwise() /
         p.feature_scale.transpose().array();
}

}  // namespace

std::vector<SurrogateSample> surrogate_sweep(const ResourceModel& rm,
                                             const SurrogateSweepSpec& spec,
                                             std::uint64_t seed) {
  rm.validate();
  if (spec.count < 2) throw ValidationError("sweep needs at least 2 points");
  if (spec.epsilons.empty()) throw ValidationError("sweep needs epsilon values");
  if (!(spec.mu_max > 0.0) || !(spec.sigma_max >= 0.0) || spec.z_max < 0)
    throw ValidationError("bad sweep ranges");
  Rng rng(seed);
  std::vector<SurrogateSample> out;
  out.reserve(spec.count);
  for (int i = 0; i < spec.count; ++i) {
    SurrogateSample s;
    s.mu = rng.uniform(0.0, spec.mu_max);
    s.sigma = rng.uniform(0.0, spec.sigma_max);
    s.z = static_cast<int>(rng.below(spec.z_max + 1));
    s.epsilon = spec.epsilons[rng.below(spec.epsilons.size())];
    s.zeta_star = wc_cvar_sdp(rm, {s.mu, s.sigma}, s.z, s.epsilon).zeta_star;
    out.push_back(s);
  }
  return out;
}

SurrogateParams surrogate_train(const std::vector<SurrogateSample>& data,
                                const SurrogateTrainConfig& cfg) {
  if (data.size() < 5) throw ValidationError("surrogate needs a larger dataset");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0))
    throw ValidationError("bad surrogate training config");
  if (!(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0))
    throw ValidationError("holdout_fraction must be in (0,1)");

  const int n = static_cast<int>(data.size());
  Eigen::MatrixXd features(n, 4);
  Eigen::VectorXd targets(n);
  for (int i = 0; i < n; ++i) {
    features.row(i) =
        feature_row(data[i].mu, data[i].sigma, data[i].z, data[i].epsilon)
            .transpose();
    targets[i] = data[i].zeta_star;
    if (!std::isfinite(targets[i]))
      throw ValidationError("surrogate targets must be finite (sentinel rows "
                            "cannot be regressed)");
  }

  // Deterministic shuffle, then holdout split from the tail.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(cfg.seed, 11));
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[shuffle_rng.below(i)]);
  const int train_n = std::max(
      1, n - std::max(1, static_cast<int>(std::lround(n * cfg.holdout_fraction))));

  SurrogateParams params;
  std::vector<int> arch_sizes = {4};
  for (int hs : cfg.hidden_sizes) arch_sizes.push_back(hs);
  arch_sizes.push_back(1);
  params.arch = MlpArch{arch_sizes};

  // Standardize features/targets on the training rows only.
  params.feature_mean.setZero();
  for (int i = 0; i < train_n; ++i)
    params.feature_mean += features.row(order[i]).transpose();
  params.feature_mean /= train_n;
  Eigen::Vector4d var = Eigen::Vector4d::Zero();
  for (int i = 0; i < train_n; ++i) {
    const Eigen::Vector4d d =
        features.row(order[i]).transpose() - params.feature_mean;
    var += d.cwiseProduct(d);
  }
  params.feature_scale =
      (var / train_n).cwiseSqrt().cwiseMax(1e-9);
  double t_mean = 0.0;
  for (int i = 0; i < train_n; ++i) t_mean += targets[order[i]];
  t_mean /= train_n;
  double t_var = 0.0;
  for (int i = 0; i < train_n; ++i)
    t_var += (targets[order[i]] - t_mean) * (targets[order[i]] - t_mean);
  params.target_mean = t_mean;
  params.target_scale = std::max(1e-9, std::sqrt(t_var / train_n));
  params.range_lo = features.colwise().minCoeff().transpose();
  params.range_hi = features.colwise().maxCoeff().transpose();

  Eigen::MatrixXd x_train(train_n, 4);
  Eigen::MatrixXd y_train(train_n, 1);
  for (int i = 0; i < train_n; ++i) {
    x_train.row(i) = features.row(order[i]);
    y_train(i, 0) = (targets[order[i]] - t_mean) / params.target_scale;
  }
  x_train = standardized(params, x_train);

  Mlp mlp(params.arch);
  Rng init_rng(derive_seed(cfg.seed, 12));
  mlp.init(init_rng);
  Adam adam(static_cast<int>(mlp.params().size()), cfg.learning_rate);
  Rng batch_rng(derive_seed(cfg.seed, 13));
  std::vector<int> idx(train_n);
  std::iota(idx.begin(), idx.end(), 0);
  const int num_batches = (train_n + cfg.batch_size - 1) / cfg.batch_size;
  Eigen::MatrixXd xb, yb;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[batch_rng.below(i)]);
    double epoch_total = 0.0;
    for (int b = 0; b < num_batches; ++b) {
      const int begin = b * cfg.batch_size;
      const int count = std::min(cfg.batch_size, train_n - begin);
      xb.resize(count, 4);
      yb.resize(count, 1);
      for (int i = 0; i < count; ++i) {
        xb.row(i) = x_train.row(idx[begin + i]);
        yb.row(i) = y_train.row(idx[begin + i]);
      }
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(mlp.params().size());
      const double loss = mlp.mse_with_gradient(xb, yb, grad);
      if (!std::isfinite(loss))
        throw TrainingError("surrogate training diverged (non-finite loss)",
                            epoch);
      adam.step(mlp.params(), grad);
      epoch_total += loss;
    }
    params.epoch_loss.push_back(epoch_total / num_batches);
  }
  params.theta = mlp.params();

  // Held-out MAE in original units.
  double mae = 0.0;
  int held = 0;
  for (int i = train_n; i < n; ++i, ++held) {
    const auto& s = data[order[i]];
    mae += std::abs(surrogate_eval(params, s.mu, s.sigma, s.z, s.epsilon) -
                    s.zeta_star);
  }
  params.holdout_mae = held > 0 ? mae / held : 0.0;
  return params;
}

Eigen::VectorXd surrogate_eval_batch(const SurrogateParams& params,
                                     const Eigen::MatrixXd& features) {
  if (features.cols() != 4)
    throw ValidationError("surrogate features must have 4 columns");
  Mlp mlp(params.arch);
  mlp.params() = params.theta;
  const Eigen::MatrixXd y = mlp.forward(standardized(params, features));
  return y.col(0) * params.target_scale +
         Eigen::VectorXd::Constant(y.rows(), params.target_mean);
}

double surrogate_eval(const SurrogateParams& params, double mu, double sigma,
                      int z, double epsilon, bool* in_range) {
  const Eigen::Vector4d f = feature_row(mu, sigma, z, epsilon);
  if (in_range) {
    *in_range = true;
    for (int j = 0; j < 4; ++j)
      if (f[j] < params.range_lo[j] || f[j] > params.range_hi[j])
        *in_range = false;
  }
  Eigen::MatrixXd row(1, 4);
  row.row(0) = f.transpose();
  return surrogate_eval_batch(params, row)[0];
}

std::string surrogate_samples_to_csv(const std::vector<SurrogateSample>& data) {
  std::string out = "mu,sigma,z,epsilon,zeta_star\n";
  for (const auto& s : data) {
    out += format_double(s.mu) + "," + format_double(s.sigma) + "," +
           std::to_string(s.z) + "," + format_double(s.epsilon) + "," +
           format_double(s.zeta_star) + "\n";
  }
  return out;
}

std::vector<SurrogateSample> surrogate_samples_from_csv(
    const std::string& text, const std::string& source_name) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      split_csv(line) != std::vector<std::string>{"mu", "sigma", "z", "epsilon",
                                                  "zeta_star"})
    throw ParseError(source_name + ": expected header mu,sigma,z,epsilon,zeta_star");
  std::vector<SurrogateSample> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::string where = source_name + ":" + std::to_string(line_no);
    const auto fields = split_csv(line);
    if (fields.size() != 5)
      throw ParseError(where + ": expected 5 fields");
    SurrogateSample s;
    s.mu = parse_double(fields[0], where);
    s.sigma = parse_double(fields[1], where);
    s.z = static_cast<int>(parse_int(fields[2], where));
    s.epsilon = parse_double(fields[3], where);
    s.zeta_star = parse_double(fields[4], where);
    out.push_back(s);
  }
  return out;
}

}  // namespace moedge

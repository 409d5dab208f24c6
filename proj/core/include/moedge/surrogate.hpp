#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "moedge/nn.hpp"
#include "moedge/robust.hpp"

namespace moedge {

/// One SDP input-output pair; features are (mu, sigma, z, epsilon) with the
/// scenario's resource model baked in.
struct SurrogateSample {
  double mu = 0.0;
  double sigma = 0.0;
  int z = 0;
  double epsilon = 0.05;
  double zeta_star = 0.0;
};

/// Operating range swept when generating the training set.
struct SurrogateSweepSpec {
  double mu_max = 100.0;
  double sigma_max = 20.0;
  int z_max = 3;
  std::vector<double> epsilons = {0.01, 0.05, 0.2, 0.5};
  int count = 10000;
};

/// Random sweep of wc_cvar_sdp over the configured feature ranges.
std::vector<SurrogateSample> surrogate_sweep(const ResourceModel& rm,
                                             const SurrogateSweepSpec& spec,
                                             std::uint64_t seed);

struct SurrogateTrainConfig {
  int epochs = 150;
  int batch_size = 128;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  double holdout_fraction = 0.2;
  std::vector<int> hidden_sizes = {32, 32, 32};  // 5-layer MLP
};

struct SurrogateParams {
  MlpArch arch;
  Eigen::VectorXd theta;
  // Feature standardization (mu, sigma, z, epsilon) and target scaling.
  Eigen::Vector4d feature_mean = Eigen::Vector4d::Zero();
  Eigen::Vector4d feature_scale = Eigen::Vector4d::Ones();
  double target_mean = 0.0;
  double target_scale = 1.0;
  // Trained input range, for the out-of-range flag.
  Eigen::Vector4d range_lo = Eigen::Vector4d::Zero();
  Eigen::Vector4d range_hi = Eigen::Vector4d::Zero();
  double holdout_mae = 0.0;
  std::vector<double> epoch_loss;
};

SurrogateParams surrogate_train(const std::vector<SurrogateSample>& data,
                                const SurrogateTrainConfig& cfg);

/// Single forward pass; sets *in_range to false when any feature falls
/// outside the trained range (the value is still returned).
double surrogate_eval(const SurrogateParams& params, double mu, double sigma,
                      int z, double epsilon, bool* in_range = nullptr);

/// Batched evaluation; rows of `features` are (mu, sigma, z, epsilon).
Eigen::VectorXd surrogate_eval_batch(const SurrogateParams& params,
                                     const Eigen::MatrixXd& features);

/// CSV round-trip, header `mu,sigma,z,epsilon,zeta_star`.
std::string surrogate_samples_to_csv(const std::vector<SurrogateSample>& data);
std::vector<SurrogateSample> surrogate_samples_from_csv(
    const std::string& text, const std::string& source_name);

}  // namespace moedge

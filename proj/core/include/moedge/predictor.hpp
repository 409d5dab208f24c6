#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "moedge/lstm.hpp"
#include "moedge/trace.hpp"

namespace moedge {

/// Sliding windows pooled over every cell of a (normalized) trace.
struct WindowedDataset {
  Eigen::MatrixXd inputs;       // num_sequences x L_in
  Eigen::MatrixXd labels;       // num_sequences x L_pred
  std::vector<int> cell_index;  // source cell (column) of each sequence
  int input_window = 0;         // L_in
  int horizon = 0;              // L_pred

  int num_sequences() const { return static_cast<int>(inputs.rows()); }
};

WindowedDataset build_windows(const DemandTrace& trace, int input_window,
                              int horizon);

struct TrainConfig {
  int epochs = 400;
  int batch_size = 128;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  int mc_train_samples = 1;  // weight samples per minibatch
  double prior_sd = 1.0;

  void validate() const {
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
    if (mc_train_samples < 1)
      throw ValidationError("mc_train_samples must be >= 1");
    if (!(prior_sd > 0.0)) throw ValidationError("prior_sd must be > 0");
  }
};

/// Deterministic-weight LSTM (the LP baseline's model).
struct PointParams {
  LstmArch arch;
  int input_window = 0;  // L_in the model was trained with
  Eigen::VectorXd theta;
  std::vector<double> epoch_loss;
};

/// Mean-field Gaussian posterior over every LSTM weight: sd_j =
/// softplus(rho_j), plus one learnable homoscedastic observation
/// log-variance (a point parameter, excluded from the KL).
struct VariationalParams {
  LstmArch arch;
  int input_window = 0;  // L_in the model was trained with
  Eigen::VectorXd mean;
  Eigen::VectorXd rho;
  double obs_log_variance = 0.0;
  double prior_sd = 1.0;
  std::vector<double> epoch_loss;
};

PointParams train_point(const WindowedDataset& data, const LstmArch& arch,
                        const TrainConfig& cfg);
VariationalParams train_variational(const WindowedDataset& data,
                                    const LstmArch& arch,
                                    const TrainConfig& cfg);

/// Per-horizon-step predictive statistics for one cell, in demand units
/// (denormalized, clipped at 0).
struct Forecast {
  Eigen::VectorXd mean;     // L_pred
  Eigen::VectorXd stddev;   // L_pred, sample sd (n-1)
  Eigen::MatrixXd samples;  // S x L_pred
};

/// history: the last L_in demands of one cell in raw units.  Draws
/// `num_samples` weight samples; observation noise is not added, so the
/// spread reflects model uncertainty only.
Forecast forecast(const VariationalParams& params, const Normalizer& norm,
                  int cell_index, const Eigen::VectorXd& history,
                  int num_samples, std::uint64_t seed);

/// Point forecast: sigma = 0, a single sample row equal to the mean.
Forecast forecast_point(const PointParams& params, const Normalizer& norm,
                        int cell_index, const Eigen::VectorXd& history);

/// Builds a Forecast from sample rows, computing mean and sample sd (n-1
/// denominator); e.g. the two samples {4, 6} give mean 5 and sd sqrt(2).
Forecast forecast_from_samples(Eigen::MatrixXd samples);

enum class GradCheckMode { DenseLinear, PointLstm, VariationalLstm };

struct GradCheckReport {
  double max_rel_error = 0.0;
  int param_count = 0;
};

/// Compares analytic gradients against central finite differences
/// (step 1e-5) for every parameter on one random batch.
GradCheckReport gradient_check(const LstmArch& arch, GradCheckMode mode,
                               std::uint64_t seed);

}  // namespace moedge

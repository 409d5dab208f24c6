#include <benchmark/benchmark.h>

#include "moedge/predictor.hpp"
#include "moedge/trace.hpp"

namespace {

moedge::DemandTrace bench_trace(int cells, int steps) {
  moedge::SyntheticProfile profile;
  profile.kind = moedge::SyntheticProfile::Kind::DiurnalSinusoid;
  profile.base = 5.0;
  profile.amplitude = 2.0;
  profile.period_steps = 144;
  profile.noise_sd = 0.3;
  return moedge::generate_synthetic_trace(cells, steps, profile, 3);
}

void BM_TrainEpochVariational(benchmark::State& state) {
  const auto trace = bench_trace(4, 400);
  const auto norm = moedge::fit_normalizer(trace);
  const auto windows = moedge::build_windows(norm.apply(trace), 24, 4);
  moedge::LstmArch arch;
  arch.input_size = 1;
  arch.hidden_size = static_cast<int>(state.range(0));
  arch.output_size = 4;
  moedge::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 64;
  cfg.seed = 5;
  for (auto _ : state)
    benchmark::DoNotOptimize(moedge::train_variational(windows, arch, cfg));
}
BENCHMARK(BM_TrainEpochVariational)->Arg(16)->Arg(50);

void BM_Forecast(benchmark::State& state) {
  const auto trace = bench_trace(1, 400);
  const auto norm = moedge::fit_normalizer(trace);
  const auto windows = moedge::build_windows(norm.apply(trace), 24, 4);
  moedge::LstmArch arch;
  arch.input_size = 1;
  arch.hidden_size = 16;
  arch.output_size = 4;
  moedge::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 64;
  cfg.seed = 5;
  const auto params = moedge::train_variational(windows, arch, cfg);
  const Eigen::VectorXd history = trace.values.col(0).head(24);
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        moedge::forecast(params, norm, 0, history, 30, ++seed));
}
BENCHMARK(BM_Forecast);

}  // namespace

#include <benchmark/benchmark.h>

#include "moedge/rng.hpp"
#include "moedge/robust.hpp"

namespace {

moedge::ResourceModel reference_model() {
  moedge::ResourceModel rm;
  rm.r = {16.0, 2.0, 24.0};
  rm.phi = {0.0, 0.0, 10.0};
  rm.varphi = {8.0, 1.0, 8.0};
  rm.g = {16.0, 2.0, 32.0};
  rm.u = {1.0, 1.0, 1.0};
  return rm;
}

void BM_WcCvarSdp(benchmark::State& state) {
  const auto rm = reference_model();
  moedge::Rng rng(7);
  for (auto _ : state) {
    const moedge::AmbiguityMoments m{rng.uniform(0.0, 100.0),
                                     rng.uniform(0.0, 20.0)};
    benchmark::DoNotOptimize(
        moedge::wc_cvar_sdp(rm, m, static_cast<int>(rng.below(4)), 0.05));
  }
}
BENCHMARK(BM_WcCvarSdp);

void BM_WcCvarClosedForm(benchmark::State& state) {
  const auto rm = reference_model();
  moedge::Rng rng(7);
  for (auto _ : state) {
    const moedge::AmbiguityMoments m{rng.uniform(0.0, 100.0),
                                     rng.uniform(0.0, 20.0)};
    benchmark::DoNotOptimize(moedge::wc_cvar_closed_form(
        rm, m, static_cast<int>(rng.below(4)), 0.05));
  }
}
BENCHMARK(BM_WcCvarClosedForm);

void BM_ExpectedUtility(benchmark::State& state) {
  const auto rm = reference_model();
  moedge::Rng rng(7);
  std::vector<double> samples(30);
  for (double& s : samples) s = rng.uniform(0.0, 10.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(moedge::expected_utility(rm, samples, 1));
}
BENCHMARK(BM_ExpectedUtility);

}  // namespace

#include <benchmark/benchmark.h>

#include "moedge/planner.hpp"
#include "moedge/rng.hpp"

namespace {

/// Synthetic value table standing in for the risk engine so the benchmark
/// isolates graph construction and the shortest-path sweep.
class TableValues : public moedge::CellValueModel {
 public:
  TableValues(int cells, int horizon, int max_z, std::uint64_t seed)
      : cells_(cells), horizon_(horizon), max_z_(max_z),
        table_(cells * horizon * (max_z + 1)) {
    moedge::Rng rng(seed);
    for (double& v : table_) v = rng.uniform(-5.0, 5.0);
  }
  double value(int cell, int h, int z) const override {
    const int zz = z > max_z_ ? max_z_ : z;
    return table_[(cell * horizon_ + h) * (max_z_ + 1) + zz];
  }

 private:
  int cells_, horizon_, max_z_;
  std::vector<double> table_;
};

void BM_PlanMulti(benchmark::State& state) {
  const int cells = static_cast<int>(state.range(0));
  const int horizon = 12;
  const TableValues values(cells, horizon, 3, 11);
  const auto transit = moedge::transit_from_grid(
      cells, static_cast<int>(std::ceil(std::sqrt(double(cells)))), 940.0,
      15.0, 10);
  const moedge::PlannerCosts costs{2.0, 3.0, 1.0};
  std::vector<moedge::SchedulableMu> mus;
  for (int i = 0; i < 3; ++i) mus.push_back({i, i % cells});
  for (auto _ : state) {
    benchmark::DoNotOptimize(moedge::plan_multi(
        values, transit, costs, 0.8, horizon, mus,
        Eigen::MatrixXi::Zero(cells, horizon), moedge::PlanOrder::Fixed));
  }
}
BENCHMARK(BM_PlanMulti)->Arg(10)->Arg(25)->Arg(100);

}  // namespace

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moedge/planner.hpp"
#include "moedge/predictor.hpp"
#include "moedge/robust.hpp"
#include "moedge/surrogate.hpp"
#include "moedge/trace.hpp"

namespace moedge {

/// Full description of one simulated deployment (Definition 1 plus the
/// experiment parameters).
struct ScenarioConfig {
  std::vector<ResourceModel> cell_models;  // one per cell
  int num_mus = 3;
  PlannerCosts costs{2.0, 3.0, 1.0};
  double penalty_constant = 5e5;
  double epsilon = 0.05;
  double discount = 0.8;  // eta
  int input_window = 144;
  int horizon = 12;
  int forecast_samples = 30;  // S
  TransitMatrix transit;
  int step_minutes = 10;
  std::vector<int> initial_cells;  // empty: MU i starts at cell i % num_cells
  PlanOrder plan_order = PlanOrder::Fixed;

  int num_cells() const { return static_cast<int>(cell_models.size()); }
  void validate() const;
};

enum class Policy { SP, MP, LP, ST, GD };
Policy policy_from_name(const std::string& name);
std::string policy_name(Policy policy);

struct MuState {
  Mode mode = Mode::Idle;
  int location = 0;        // current cell; transit origin while moving
  int destination = -1;    // transit target, -1 otherwise
  int remaining_transit = 0;  // > 0 iff mode == Transit
};

/// Realized accounting of one step.
struct StepLedger {
  int step = 0;
  std::vector<double> utility;  // U_a(t)
  std::vector<double> penalty;  // P_a(t)
  std::vector<double> excess;   // realized zeta
  double cost = 0.0;            // C(t)
  double profit = 0.0;          // S(t)
  int z_opt = 0, z_tra = 0, z_idl = 0;
};

struct ActionLogEntry {
  int step = 0;  // the step the action takes effect
  int mu_id = 0;
  std::string mode;  // opt/tra/idl, or "none" for the ⊥ marker
  int location = 0;
  int destination = -1;
};

/// Trained artifacts a policy may need; unused pointers stay null.
struct PolicyArtifacts {
  const VariationalParams* bnn = nullptr;
  const PointParams* point = nullptr;
  const SurrogateParams* surrogate = nullptr;
  const Normalizer* normalizer = nullptr;
  const DemandTrace* train_trace = nullptr;  // D1 (raw units), for ST
};

/// Wall-clock phase accounting; reported separately from SimReport so the
/// report files stay byte-identical across runs.
struct PhaseTimings {
  double forecast_seconds = 0.0;
  double risk_seconds = 0.0;
  double plan_seconds = 0.0;
  int decisions = 0;
};

struct SimReport {
  std::string policy;
  std::uint64_t seed = 0;
  int num_cells = 0, num_mus = 0;
  double penalty_constant = 0.0, epsilon = 0.0;
  int input_window = 0, horizon = 0, step_minutes = 0;
  int total_steps = 0, warmup_steps = 0, measured_steps = 0;
  double average_profit = 0.0;
  double total_utility = 0.0, total_penalty = 0.0, total_cost = 0.0;
  int violation_count = 0;  // (cell, step) pairs with realized zeta > 0
  double total_realized_excess = 0.0;
  int surrogate_out_of_range = 0;
  std::vector<double> transit_ratio_by_time_of_day;
  std::vector<double> mean_demand_by_time_of_day;
  std::vector<StepLedger> ledgers;  // every step, including warm-up
  std::vector<ActionLogEntry> action_log;
};

/// Read-only environment lookup: realized demands at step t.
Eigen::VectorXd step_environment(const DemandTrace& trace, int t);

/// Applies one decision round; in-transit MUs must carry the ⊥ marker.
std::vector<MuState> apply_actions(const std::vector<MuState>& states,
                                   const std::vector<MuAction>& actions,
                                   const TransitMatrix& transit);

/// End-of-step transit countdown; arrivals become idle at the destination.
void advance_transits(std::vector<MuState>& states);

StepLedger realized_profit(const ScenarioConfig& scenario,
                           const Eigen::VectorXd& demands,
                           const std::vector<MuState>& states, int step);

/// ST: the m cells with the largest total demand in the training trace.
std::vector<int> baseline_static(const DemandTrace& train_trace, int num_mus);

/// GD: send MUs to the top-m cells by mean predicted demand over the
/// horizon (greedy nearest pairing).
std::vector<MuAction> baseline_greedy(const std::vector<Forecast>& forecasts,
                                      const ScenarioConfig& scenario,
                                      const std::vector<MuState>& states);

SimReport run_policy(const ScenarioConfig& scenario,
                     const DemandTrace& test_trace, Policy policy,
                     const PolicyArtifacts& artifacts, std::uint64_t seed,
                     PhaseTimings* timings = nullptr);

}  // namespace moedge

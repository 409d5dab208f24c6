#include "moedge/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "moedge/rng.hpp"

namespace moedge {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

void ScenarioConfig::validate() const {
  if (cell_models.empty())
    throw ValidationError("scenario needs at least one cell");
  for (const auto& rm : cell_models) rm.validate();
  if (num_mus < 1) throw ValidationError("num_mus must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw ValidationError("epsilon must lie in (0, 1)");
  if (!(discount > 0.0 && discount <= 1.0))
    throw ValidationError("discount must lie in (0, 1]");
  if (!(costs.c_opt >= 0.0 && costs.c_tra >= 0.0 && costs.c_idl >= 0.0))
    throw ValidationError("mode costs must be >= 0");
  if (!(penalty_constant >= 0.0))
    throw ValidationError("penalty_constant must be >= 0");
  if (input_window < 1) throw ValidationError("input_window must be >= 1");
  if (horizon < 1) throw ValidationError("horizon must be >= 1");
  if (forecast_samples < 1)
    throw ValidationError("forecast_samples must be >= 1");
  if (step_minutes < 1) throw ValidationError("step_minutes must be >= 1");
  transit.validate();
  if (transit.num_cells() != num_cells())
    throw ValidationError("transit matrix size does not match cell count");
  if (!initial_cells.empty()) {
    if (static_cast<int>(initial_cells.size()) != num_mus)
      throw ValidationError("initial_cells must list one cell per MU");
    for (int c : initial_cells)
      if (c < 0 || c >= num_cells())
        throw ValidationError("initial_cells entry out of range");
  }
}

Policy policy_from_name(const std::string& name) {
  if (name == "SP") return Policy::SP;
  if (name == "MP") return Policy::MP;
  if (name == "LP") return Policy::LP;
  if (name == "ST") return Policy::ST;
  if (name == "GD") return Policy::GD;
  throw ConfigError("unknown policy '" + name + "' (expected SP/MP/LP/ST/GD)");
}

std::string policy_name(Policy policy) {
  switch (policy) {
    case Policy::SP: return "SP";
    case Policy::MP: return "MP";
    case Policy::LP: return "LP";
    case Policy::ST: return "ST";
    case Policy::GD: return "GD";
  }
  throw ValidationError("invalid policy enum value");
}

Eigen::VectorXd step_environment(const DemandTrace& trace, int t) {
  if (t < 0 || t >= trace.num_steps())
    throw ValidationError("step_environment: step " + std::to_string(t) +
                          " outside trace of length " +
                          std::to_string(trace.num_steps()));
  return trace.values.row(t).transpose();
}

std::vector<MuState> apply_actions(const std::vector<MuState>& states,
                                   const std::vector<MuAction>& actions,
                                   const TransitMatrix& transit) {
  if (actions.size() != states.size())
    throw ValidationError("apply_actions: one action per MU required");
  std::vector<MuState> next = states;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const MuState& mu = states[i];
    const MuAction& act = actions[i];
    const std::string who = "MU " + std::to_string(i);
    const bool in_transit = mu.mode == Mode::Transit && mu.remaining_transit > 0;
    if (in_transit) {
      if (!act.no_action)
        throw ValidationError(who + ": in-transit MUs accept only the ⊥ action");
      continue;
    }
    if (act.no_action)
      throw ValidationError(who + ": ⊥ is only valid for in-transit MUs");
    MuState& out = next[i];
    switch (act.mode) {
      case Mode::Operational:
      case Mode::Idle:
        out.mode = act.mode;
        out.destination = -1;
        out.remaining_transit = 0;
        break;
      case Mode::Transit: {
        if (act.destination < 0 || act.destination >= transit.num_cells())
          throw ValidationError(who + ": transit destination out of range");
        if (act.destination == mu.location)
          throw ValidationError(who + ": transit to the current cell");
        out.mode = Mode::Transit;
        out.destination = act.destination;
        out.remaining_transit = transit.at(mu.location, act.destination);
        break;
      }
    }
  }
  return next;
}

void advance_transits(std::vector<MuState>& states) {
  for (auto& mu : states) {
    if (mu.mode != Mode::Transit) continue;
    if (--mu.remaining_transit <= 0) {
      mu.location = mu.destination;
      mu.destination = -1;
      mu.remaining_transit = 0;
      mu.mode = Mode::Idle;
    }
  }
}

StepLedger realized_profit(const ScenarioConfig& scenario,
                           const Eigen::VectorXd& demands,
                           const std::vector<MuState>& states, int step) {
  const int cells = scenario.num_cells();
  if (demands.size() != cells)
    throw ValidationError("realized_profit: demand vector size mismatch");
  StepLedger ledger;
  ledger.step = step;
  std::vector<int> z(cells, 0);
  for (const auto& mu : states) {
    switch (mu.mode) {
      case Mode::Operational:
        ++z[mu.location];
        ++ledger.z_opt;
        break;
      case Mode::Transit: ++ledger.z_tra; break;
      case Mode::Idle: ++ledger.z_idl; break;
    }
  }
  ledger.utility.resize(cells);
  ledger.penalty.resize(cells);
  ledger.excess.resize(cells);
  double sum_u_minus_p = 0.0;
  for (int a = 0; a < cells; ++a) {
    const ResourceModel& rm = scenario.cell_models[a];
    ledger.utility[a] = utility(rm, demands[a], z[a]);
    ledger.excess[a] = excess_demand(rm, demands[a], z[a]);
    ledger.penalty[a] =
        expected_penalty(ledger.excess[a], scenario.penalty_constant);
    sum_u_minus_p += ledger.utility[a] - ledger.penalty[a];
  }
  ledger.cost = ledger.z_opt * scenario.costs.c_opt +
                ledger.z_tra * scenario.costs.c_tra +
                ledger.z_idl * scenario.costs.c_idl;
  ledger.profit = sum_u_minus_p - ledger.cost;
  return ledger;
}

std::vector<int> baseline_static(const DemandTrace& train_trace, int num_mus) {
  const int cells = train_trace.num_cells();
  if (num_mus < 1) throw ValidationError("baseline_static: num_mus must be >= 1");
  if (num_mus > cells)
    throw ValidationError("baseline_static: more MUs than cells");
  std::vector<std::pair<double, int>> totals(cells);
  for (int c = 0; c < cells; ++c)
    totals[c] = {train_trace.values.col(c).sum(), c};
  std::stable_sort(totals.begin(), totals.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int> placement(num_mus);
  for (int i = 0; i < num_mus; ++i) placement[i] = totals[i].second;
  return placement;
}

std::vector<MuAction> baseline_greedy(const std::vector<Forecast>& forecasts,
                                      const ScenarioConfig& scenario,
                                      const std::vector<MuState>& states) {
  const int cells = scenario.num_cells();
  if (static_cast<int>(forecasts.size()) != cells)
    throw ValidationError("baseline_greedy: one forecast per cell required");
  // Rank cells by mean predicted demand over the horizon, ties to lower id.
  std::vector<std::pair<double, int>> score(cells);
  for (int c = 0; c < cells; ++c) score[c] = {forecasts[c].mean.mean(), c};
  std::stable_sort(score.begin(), score.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const int num_targets = std::min(scenario.num_mus, cells);
  std::vector<int> targets(num_targets);
  for (int i = 0; i < num_targets; ++i) targets[i] = score[i].second;

  std::vector<MuAction> actions(states.size());
  std::vector<int> movable;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].mode == Mode::Transit) {
      actions[i].no_action = true;
    } else {
      actions[i].mode = Mode::Idle;  // default for unassigned MUs
      movable.push_back(static_cast<int>(i));
    }
  }
  // Greedy nearest pairing: repeatedly commit the (MU, target) pair with the
  // smallest transit time, breaking ties by MU id then target cell id.
  std::vector<bool> target_used(num_targets, false);
  std::vector<bool> mu_used(movable.size(), false);
  const int rounds = std::min<int>(num_targets, static_cast<int>(movable.size()));
  for (int round = 0; round < rounds; ++round) {
    int best_mu = -1, best_target = -1, best_dist = 0;
    for (std::size_t mi = 0; mi < movable.size(); ++mi) {
      if (mu_used[mi]) continue;
      const int loc = states[movable[mi]].location;
      for (int ti = 0; ti < num_targets; ++ti) {
        if (target_used[ti]) continue;
        const int dist = loc == targets[ti] ? 0 : scenario.transit.at(loc, targets[ti]);
        if (best_mu < 0 || dist < best_dist) {
          best_mu = static_cast<int>(mi);
          best_target = ti;
          best_dist = dist;
        }
      }
    }
    mu_used[best_mu] = true;
    target_used[best_target] = true;
    const int mu_index = movable[best_mu];
    MuAction& act = actions[mu_index];
    if (states[mu_index].location == targets[best_target]) {
      act.mode = Mode::Operational;
    } else {
      act.mode = Mode::Transit;
      act.destination = targets[best_target];
    }
  }
  return actions;
}

namespace {

enum class RiskMode { Sdp, Surrogate, PointOnly };

/// CellValueModel computing V(a, t+1+h, z) = EU - EP from the forecasts of
/// one decision round, with per-(cell, h, z) memoization.  The risk engine
/// differs per policy: full SDP (SP), surrogate MLP (MP), or point excess
/// demand with sigma treated as 0 (LP).
class RiskValueModel : public CellValueModel {
 public:
  RiskValueModel(const ScenarioConfig& scenario,
                 const std::vector<Forecast>& forecasts, RiskMode mode,
                 const SurrogateParams* surrogate)
      : scenario_(scenario), forecasts_(forecasts), mode_(mode),
        surrogate_(surrogate) {}

  double value(int cell, int h, int z) const override {
    const long long key =
        (static_cast<long long>(cell) * (scenario_.horizon + 1) + h) * 1024 + z;
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const auto start = std::chrono::steady_clock::now();
    const double v = compute(cell, h, z);
    risk_seconds_ += seconds_since(start);
    cache_.emplace(key, v);
    return v;
  }

  double risk_seconds() const { return risk_seconds_; }
  int out_of_range() const { return out_of_range_; }

 private:
  double compute(int cell, int h, int z) const {
    const ResourceModel& rm = scenario_.cell_models[cell];
    const Forecast& fc = forecasts_[cell];
    const Eigen::MatrixXd& samples = fc.samples;
    std::vector<double> column(samples.rows());
    for (int s = 0; s < samples.rows(); ++s) column[s] = samples(s, h);
    const double eu = expected_utility(rm, column, z);
    double zeta = 0.0;
    switch (mode_) {
      case RiskMode::Sdp: {
        const AmbiguityMoments m{fc.mean[h], fc.stddev[h]};
        zeta = wc_cvar_sdp(rm, m, z, scenario_.epsilon).zeta_star;
        break;
      }
      case RiskMode::Surrogate: {
        bool in_range = true;
        zeta = surrogate_eval(*surrogate_, fc.mean[h], fc.stddev[h], z,
                              scenario_.epsilon, &in_range);
        if (!in_range) ++out_of_range_;
        break;
      }
      case RiskMode::PointOnly:
        zeta = excess_demand(rm, fc.mean[h], z);
        break;
    }
    return eu - expected_penalty(zeta, scenario_.penalty_constant);
  }

  const ScenarioConfig& scenario_;
  const std::vector<Forecast>& forecasts_;
  RiskMode mode_;
  const SurrogateParams* surrogate_;
  mutable std::unordered_map<long long, double> cache_;
  mutable double risk_seconds_ = 0.0;
  mutable int out_of_range_ = 0;
};

void require_artifact(const void* ptr, const std::string& what,
                      const std::string& policy) {
  if (ptr == nullptr)
    throw ArtifactError("policy " + policy + " requires the " + what +
                        " artifact");
}

void check_artifacts(Policy policy, const PolicyArtifacts& art,
                     const ScenarioConfig& sc) {
  const std::string name = policy_name(policy);
  const bool needs_bnn =
      policy == Policy::SP || policy == Policy::MP || policy == Policy::GD;
  if (needs_bnn) {
    require_artifact(art.bnn, "variational predictor", name);
    require_artifact(art.normalizer, "normalizer", name);
    if (art.bnn->arch.output_size != sc.horizon)
      throw ArtifactError("variational predictor horizon " +
                          std::to_string(art.bnn->arch.output_size) +
                          " does not match scenario horizon " +
                          std::to_string(sc.horizon));
    if (art.bnn->input_window != sc.input_window)
      throw ArtifactError("variational predictor input window " +
                          std::to_string(art.bnn->input_window) +
                          " does not match scenario input window " +
                          std::to_string(sc.input_window));
  }
  if (policy == Policy::MP) require_artifact(art.surrogate, "surrogate", name);
  if (policy == Policy::LP) {
    require_artifact(art.point, "point predictor", name);
    require_artifact(art.normalizer, "normalizer", name);
    if (art.point->arch.output_size != sc.horizon)
      throw ArtifactError("point predictor horizon " +
                          std::to_string(art.point->arch.output_size) +
                          " does not match scenario horizon " +
                          std::to_string(sc.horizon));
    if (art.point->input_window != sc.input_window)
      throw ArtifactError("point predictor input window " +
                          std::to_string(art.point->input_window) +
                          " does not match scenario input window " +
                          std::to_string(sc.input_window));
  }
  if (policy == Policy::ST)
    require_artifact(art.train_trace, "training trace", name);
  if (art.normalizer != nullptr &&
      static_cast<int>(art.normalizer->cells.size()) != sc.num_cells())
    throw ArtifactError("normalizer covers " +
                        std::to_string(art.normalizer->cells.size()) +
                        " cells, scenario has " +
                        std::to_string(sc.num_cells()));
}

}  // namespace

SimReport run_policy(const ScenarioConfig& scenario,
                     const DemandTrace& test_trace, Policy policy,
                     const PolicyArtifacts& artifacts, std::uint64_t seed,
                     PhaseTimings* timings) {
  scenario.validate();
  if (test_trace.num_cells() != scenario.num_cells())
    throw ValidationError("test trace cell count does not match scenario");
  const int total_steps = test_trace.num_steps();
  const int cells = scenario.num_cells();
  const int warmup = scenario.input_window;
  if (total_steps <= warmup)
    throw ValidationError("test trace must be longer than the warm-up window (" +
                          std::to_string(warmup) + " steps)");
  check_artifacts(policy, artifacts, scenario);

  // Initial fleet placement.
  std::vector<MuState> states(scenario.num_mus);
  if (policy == Policy::ST) {
    const auto placement = baseline_static(*artifacts.train_trace, scenario.num_mus);
    for (int i = 0; i < scenario.num_mus; ++i) {
      states[i].location = placement[i];
      states[i].mode = Mode::Operational;
    }
  } else {
    for (int i = 0; i < scenario.num_mus; ++i) {
      states[i].location = scenario.initial_cells.empty()
                               ? i % cells
                               : scenario.initial_cells[i];
      states[i].mode = Mode::Idle;
    }
  }

  SimReport report;
  report.policy = policy_name(policy);
  report.seed = seed;
  report.num_cells = cells;
  report.num_mus = scenario.num_mus;
  report.penalty_constant = scenario.penalty_constant;
  report.epsilon = scenario.epsilon;
  report.input_window = scenario.input_window;
  report.horizon = scenario.horizon;
  report.step_minutes = scenario.step_minutes;
  report.total_steps = total_steps;
  report.warmup_steps = warmup;
  report.measured_steps = total_steps - warmup;

  const int steps_per_day = std::max(1, 24 * 60 / scenario.step_minutes);
  std::vector<double> transit_sum(steps_per_day, 0.0);
  std::vector<double> demand_sum(steps_per_day, 0.0);
  std::vector<int> tod_count(steps_per_day, 0);

  PhaseTimings local_timings;
  const RiskMode risk_mode = policy == Policy::MP    ? RiskMode::Surrogate
                             : policy == Policy::LP ? RiskMode::PointOnly
                                                    : RiskMode::Sdp;

  for (int t = 0; t < total_steps; ++t) {
    const Eigen::VectorXd demands = step_environment(test_trace, t);
    StepLedger ledger = realized_profit(scenario, demands, states, t);

    if (t >= warmup) {
      report.average_profit += ledger.profit;
      report.total_cost += ledger.cost;
      for (int a = 0; a < cells; ++a) {
        report.total_utility += ledger.utility[a];
        report.total_penalty += ledger.penalty[a];
        if (ledger.excess[a] > 0.0) {
          ++report.violation_count;
          report.total_realized_excess += ledger.excess[a];
        }
      }
      const int tod = t % steps_per_day;
      transit_sum[tod] += static_cast<double>(ledger.z_tra) / scenario.num_mus;
      demand_sum[tod] += demands.mean();
      ++tod_count[tod];
    }
    report.ledgers.push_back(std::move(ledger));

    // End of step t: transits advance, then the policy decides for t + 1.
    advance_transits(states);
    const bool decide = policy != Policy::ST && t + 1 < total_steps &&
                        t >= scenario.input_window - 1;
    if (!decide) continue;
    ++local_timings.decisions;

    // Forecast each cell from the last L_in realized demands.
    std::vector<Forecast> forecasts(cells);
    const auto forecast_start = std::chrono::steady_clock::now();
    for (int c = 0; c < cells; ++c) {
      const Eigen::VectorXd history = test_trace.values.col(c).segment(
          t - scenario.input_window + 1, scenario.input_window);
      const std::uint64_t cell_seed = derive_seed(
          seed, static_cast<std::uint64_t>(t) * cells + c);
      if (policy == Policy::LP)
        forecasts[c] =
            forecast_point(*artifacts.point, *artifacts.normalizer, c, history);
      else
        forecasts[c] = forecast(*artifacts.bnn, *artifacts.normalizer, c,
                                history, scenario.forecast_samples, cell_seed);
    }
    local_timings.forecast_seconds += seconds_since(forecast_start);

    std::vector<MuAction> actions;
    if (policy == Policy::GD) {
      const auto plan_start = std::chrono::steady_clock::now();
      actions = baseline_greedy(forecasts, scenario, states);
      local_timings.plan_seconds += seconds_since(plan_start);
    } else {
      RiskValueModel values(scenario, forecasts, risk_mode, artifacts.surrogate);
      // Pre-commit occupancy of in-transit MUs: one arriving with R steps
      // remaining can first operate at relative time R of this round.
      Eigen::MatrixXi occupancy = Eigen::MatrixXi::Zero(cells, scenario.horizon);
      std::vector<SchedulableMu> schedulable;
      for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i].mode == Mode::Transit) {
          for (int h = states[i].remaining_transit; h < scenario.horizon; ++h)
            ++occupancy(states[i].destination, h);
        } else {
          schedulable.push_back({static_cast<int>(i), states[i].location});
        }
      }
      const auto plan_start = std::chrono::steady_clock::now();
      const auto plans =
          plan_multi(values, scenario.transit, scenario.costs,
                     scenario.discount, scenario.horizon, schedulable,
                     std::move(occupancy), scenario.plan_order);
      const auto planned_actions = extract_next_actions(plans);
      local_timings.plan_seconds +=
          seconds_since(plan_start) - values.risk_seconds();
      local_timings.risk_seconds += values.risk_seconds();
      report.surrogate_out_of_range += values.out_of_range();
      actions.assign(states.size(), MuAction{true, Mode::Idle, -1});
      for (std::size_t i = 0; i < schedulable.size(); ++i)
        actions[schedulable[i].id] = planned_actions[i];
    }

    for (std::size_t i = 0; i < actions.size(); ++i) {
      ActionLogEntry entry;
      entry.step = t + 1;
      entry.mu_id = static_cast<int>(i);
      entry.mode = actions[i].no_action ? "none" : mode_name(actions[i].mode);
      entry.location = states[i].location;
      entry.destination = actions[i].destination;
      report.action_log.push_back(std::move(entry));
    }
    states = apply_actions(states, actions, scenario.transit);
  }

  if (report.measured_steps > 0)
    report.average_profit /= report.measured_steps;
  report.transit_ratio_by_time_of_day.resize(steps_per_day, 0.0);
  report.mean_demand_by_time_of_day.resize(steps_per_day, 0.0);
  for (int tod = 0; tod < steps_per_day; ++tod) {
    if (tod_count[tod] == 0) continue;
    report.transit_ratio_by_time_of_day[tod] = transit_sum[tod] / tod_count[tod];
    report.mean_demand_by_time_of_day[tod] = demand_sum[tod] / tod_count[tod];
  }
  if (timings != nullptr) *timings = local_timings;
  return report;
}

}  // namespace moedge

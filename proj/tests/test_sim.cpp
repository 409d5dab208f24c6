#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "moedge/sim.hpp"
#include "test_support.hpp"

using namespace moedge;
using namespace moedge::testsupport;

namespace {

DemandTrace make_trace(const Eigen::MatrixXd& values) {
  DemandTrace trace;
  trace.values = values;
  trace.step_minutes = 10;
  trace.cells.resize(values.cols());
  for (int c = 0; c < values.cols(); ++c) trace.cells[c] = c;
  return trace;
}

ScenarioConfig reference_scenario(int cells) {
  ScenarioConfig sc;
  sc.cell_models.assign(cells, reference_model());
  sc.transit = transit_uniform(cells, 2);
  return sc;
}

/// Small scenario + sinusoidal 2-cell trace used by the end-to-end runs.
struct TinyWorld {
  ScenarioConfig scenario;
  DemandTrace trace;
  Normalizer norm;
  DemandTrace normed;
};

TinyWorld tiny_world(int steps) {
  TinyWorld w;
  w.scenario = reference_scenario(2);
  w.scenario.num_mus = 2;
  w.scenario.input_window = 4;
  w.scenario.horizon = 2;
  w.scenario.forecast_samples = 8;
  w.scenario.transit = transit_uniform(2, 1);
  w.scenario.penalty_constant = 10.0;  // keep profits tame for the tiny runs

  Eigen::MatrixXd values(steps, 2);
  for (int t = 0; t < steps; ++t) {
    values(t, 0) = 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * t / 6.0);
    values(t, 1) = 0.6;
  }
  w.trace = make_trace(values);
  w.norm = fit_normalizer(w.trace);
  w.normed = w.norm.apply(w.trace);
  return w;
}

}  // namespace

TEST_CASE("policy names round trip") {
  for (Policy p : {Policy::SP, Policy::MP, Policy::LP, Policy::ST, Policy::GD})
    CHECK(policy_from_name(policy_name(p)) == p);
  CHECK_THROWS_AS(policy_from_name("xx"), ConfigError);
}

TEST_CASE("step_environment returns one realized row") {
  Eigen::MatrixXd values(3, 2);
  values << 1, 2, 3, 4, 5, 6;
  const DemandTrace trace = make_trace(values);
  const Eigen::VectorXd d1 = step_environment(trace, 1);
  CHECK(d1(0) == 3.0);
  CHECK(d1(1) == 4.0);
  CHECK_THROWS_AS(step_environment(trace, -1), ValidationError);
  CHECK_THROWS_AS(step_environment(trace, 3), ValidationError);
}

TEST_CASE("apply_actions: transitions and contract violations") {
  const TransitMatrix transit = transit_uniform(3, 2);
  std::vector<MuState> states(2);
  states[0].location = 0;
  states[1].location = 1;

  std::vector<MuAction> actions(2);
  actions[0] = {false, Mode::Transit, 2};
  actions[1] = {false, Mode::Operational, -1};
  auto next = apply_actions(states, actions, transit);
  CHECK(next[0].mode == Mode::Transit);
  CHECK(next[0].location == 0);  // origin until arrival
  CHECK(next[0].destination == 2);
  CHECK(next[0].remaining_transit == 2);
  CHECK(next[1].mode == Mode::Operational);
  CHECK(next[1].destination == -1);

  // In-transit MUs accept only the ⊥ marker.
  std::vector<MuAction> noop(2);
  noop[0] = {true, Mode::Idle, -1};
  noop[1] = {false, Mode::Idle, -1};
  CHECK_NOTHROW(apply_actions(next, noop, transit));
  std::vector<MuAction> bad = noop;
  bad[0] = {false, Mode::Idle, -1};
  CHECK_THROWS_AS(apply_actions(next, bad, transit), ValidationError);

  // ...and schedulable MUs must receive a real action.
  bad = noop;
  bad[1] = {true, Mode::Idle, -1};
  CHECK_THROWS_AS(apply_actions(next, bad, transit), ValidationError);

  // Destination range and self-transit checks.
  bad = noop;
  bad[1] = {false, Mode::Transit, 3};
  CHECK_THROWS_AS(apply_actions(next, bad, transit), ValidationError);
  bad[1] = {false, Mode::Transit, 1};
  CHECK_THROWS_AS(apply_actions(next, bad, transit), ValidationError);

  CHECK_THROWS_AS(apply_actions(states, std::vector<MuAction>(1), transit),
                  ValidationError);
}

TEST_CASE("advance_transits: countdown and arrival") {
  // Dispatch with T = 2: in transit during two steps, then idle at the
  // destination.
  const TransitMatrix transit = transit_uniform(3, 2);
  std::vector<MuState> states(1);
  states[0].location = 0;
  auto moving =
      apply_actions(states, {{false, Mode::Transit, 2}}, transit);

  advance_transits(moving);  // end of the first transit step
  CHECK(moving[0].mode == Mode::Transit);
  CHECK(moving[0].location == 0);
  CHECK(moving[0].remaining_transit == 1);

  advance_transits(moving);  // end of the second: arrival
  CHECK(moving[0].mode == Mode::Idle);
  CHECK(moving[0].location == 2);
  CHECK(moving[0].destination == -1);
  CHECK(moving[0].remaining_transit == 0);

  advance_transits(moving);  // no-op for settled MUs
  CHECK(moving[0].mode == Mode::Idle);
  CHECK(moving[0].location == 2);
}

TEST_CASE("realized_profit: frozen ledger on the worked example") {
  ScenarioConfig sc = reference_scenario(3);
  sc.num_mus = 3;

  std::vector<MuState> states(3);
  states[0] = {Mode::Operational, 0, -1, 0};
  states[1] = {Mode::Transit, 1, 2, 1};
  states[2] = {Mode::Idle, 2, -1, 0};

  Eigen::VectorXd demands(3);
  demands << 5.0, 5.0, 0.0;

  const StepLedger ledger = realized_profit(sc, demands, states, 7);
  CHECK(ledger.step == 7);
  CHECK(ledger.z_opt == 1);
  CHECK(ledger.z_tra == 1);
  CHECK(ledger.z_idl == 1);
  CHECK(ledger.z_opt + ledger.z_tra + ledger.z_idl == sc.num_mus);

  // Mode costs: 2 + 3 + 1.
  CHECK(ledger.cost == doctest::Approx(6.0).epsilon(1e-12));

  // Cell 0 hosts the single operational MU: zeta(5, 1) = 0.2.
  CHECK(ledger.excess[0] == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(ledger.penalty[0] == doctest::Approx(0.2 * 5e5).epsilon(1e-9));
  // Cell 1's MU is still in transit, so z = 1 there is not yet counted.
  CHECK(ledger.excess[1] == doctest::Approx(3.4).epsilon(1e-12));
  CHECK(ledger.penalty[1] == doctest::Approx(1.7e6).epsilon(1e-12));
  // Cell 2 sees no demand: negative excess, no penalty.
  CHECK(ledger.excess[2] == doctest::Approx(-1.6).epsilon(1e-12));
  CHECK(ledger.penalty[2] == 0.0);

  // Saturated resources at both loaded cells floor the utility.
  CHECK(ledger.utility[0] == doctest::Approx(-100.0));
  CHECK(ledger.utility[1] == doctest::Approx(-100.0));
  CHECK(ledger.utility[2] == doctest::Approx(-1.0));

  // Ledger identity: profit = sum(U - P) - C.
  double want = -ledger.cost;
  for (int a = 0; a < 3; ++a) want += ledger.utility[a] - ledger.penalty[a];
  CHECK(ledger.profit == doctest::Approx(want).epsilon(1e-12));
  CHECK(ledger.profit == doctest::Approx(-1800207.0).epsilon(1e-9));

  Eigen::VectorXd wrong(2);
  wrong << 1.0, 1.0;
  CHECK_THROWS_AS(realized_profit(sc, wrong, states, 0), ValidationError);
}

TEST_CASE("baseline_static: ranking, ties and bounds") {
  Eigen::MatrixXd values(4, 4);
  values << 1, 3, 2, 3,  //
      1, 3, 2, 3,        //
      0, 2, 2, 2,        //
      0, 2, 2, 2;
  const DemandTrace trace = make_trace(values);
  // Totals: cell0 = 2, cell1 = 10, cell2 = 8, cell3 = 10.

  CHECK(baseline_static(trace, 1) == std::vector<int>{1});
  CHECK(baseline_static(trace, 2) == std::vector<int>{1, 3});  // tie: lower id
  CHECK(baseline_static(trace, 3) == std::vector<int>{1, 3, 2});
  CHECK(baseline_static(trace, 4) == std::vector<int>{1, 3, 2, 0});
  CHECK_THROWS_AS(baseline_static(trace, 5), ValidationError);
  CHECK_THROWS_AS(baseline_static(trace, 0), ValidationError);
}

TEST_CASE("baseline_greedy: targeting, pairing and the ⊥ marker") {
  ScenarioConfig sc = reference_scenario(4);
  sc.num_mus = 2;
  sc.transit = transit_uniform(4, 2);
  sc.transit.steps(0, 1) = sc.transit.steps(1, 0) = 1;
  sc.transit.steps(2, 3) = sc.transit.steps(3, 2) = 1;
  sc.horizon = 2;

  auto forecast_of = [](double level) {
    Forecast fc;
    fc.mean = Eigen::VectorXd::Constant(2, level);
    fc.stddev = Eigen::VectorXd::Zero(2);
    fc.samples = Eigen::MatrixXd::Constant(1, 2, level);
    return fc;
  };
  // Top-2 cells by predicted mean: 1 (9.0) and 3 (7.0).
  const std::vector<Forecast> forecasts = {forecast_of(1.0), forecast_of(9.0),
                                           forecast_of(2.0), forecast_of(7.0)};

  std::vector<MuState> states(2);
  states[0].location = 2;  // one step from target 3
  states[1].location = 0;  // one step from target 1
  auto actions = baseline_greedy(forecasts, sc, states);
  REQUIRE(actions.size() == 2);
  CHECK(actions[0].mode == Mode::Transit);
  CHECK(actions[0].destination == 3);
  CHECK(actions[1].mode == Mode::Transit);
  CHECK(actions[1].destination == 1);

  // An MU already on a target operates in place.
  states[0].location = 1;
  actions = baseline_greedy(forecasts, sc, states);
  CHECK(actions[0].mode == Mode::Operational);
  CHECK(actions[0].destination == -1);
  CHECK(actions[1].mode == Mode::Transit);
  CHECK(actions[1].destination == 3);  // cell 1 is taken; nearest left is 3

  // In-transit MUs keep moving and release their pairing slot.
  states[1] = {Mode::Transit, 0, 3, 1};
  actions = baseline_greedy(forecasts, sc, states);
  CHECK(actions[1].no_action);
  CHECK(actions[0].mode == Mode::Operational);

  // With equal forecasts the targets are the lowest cell ids.
  const std::vector<Forecast> flat = {forecast_of(1.0), forecast_of(1.0),
                                      forecast_of(1.0), forecast_of(1.0)};
  states[0] = MuState{};
  states[0].location = 3;
  states[1] = MuState{};
  states[1].location = 1;
  actions = baseline_greedy(flat, sc, states);
  // Targets {0, 1}: MU1 sits on 1 (distance 0), MU0 crosses to 0.
  CHECK(actions[1].mode == Mode::Operational);
  CHECK(actions[0].mode == Mode::Transit);
  CHECK(actions[0].destination == 0);

  // More MUs than targets: the extras idle.
  std::vector<MuState> three(3);
  three[0].location = 0;
  three[1].location = 1;
  three[2].location = 2;
  ScenarioConfig two = sc;
  two.num_mus = 2;
  auto extra = baseline_greedy(forecasts, two, three);
  int idle = 0;
  for (const auto& a : extra) idle += !a.no_action && a.mode == Mode::Idle;
  CHECK(idle == 1);

  CHECK_THROWS_AS(baseline_greedy({forecast_of(1.0)}, sc, states),
                  ValidationError);
}

TEST_CASE("run_policy ST: static placement, no decisions, exact metrics") {
  TinyWorld w = tiny_world(10);
  // Cell 0 carries more demand than cell 1, so both MUs... ST places one MU
  // per ranked cell: MU0 at cell 0, MU1 at cell 1, both operational.
  PolicyArtifacts artifacts;
  artifacts.train_trace = &w.trace;

  const SimReport report = run_policy(w.scenario, w.trace, Policy::ST,
                                      artifacts, 42);
  CHECK(report.policy == "ST");
  CHECK(report.total_steps == 10);
  CHECK(report.warmup_steps == 4);
  CHECK(report.measured_steps == 6);
  CHECK(report.action_log.empty());
  REQUIRE(report.ledgers.size() == 10);
  for (const StepLedger& ledger : report.ledgers) {
    CHECK(ledger.z_opt == 2);
    CHECK(ledger.z_tra == 0);
    CHECK(ledger.z_idl == 0);
    CHECK(ledger.cost == doctest::Approx(4.0));  // 2 x c_opt
  }

  // Aggregates recompute exactly from the measured ledgers.
  double profit = 0.0, util = 0.0, pen = 0.0, cost = 0.0, excess = 0.0;
  int violations = 0;
  for (int t = 4; t < 10; ++t) {
    const StepLedger& ledger = report.ledgers[t];
    profit += ledger.profit;
    cost += ledger.cost;
    for (int a = 0; a < 2; ++a) {
      util += ledger.utility[a];
      pen += ledger.penalty[a];
      if (ledger.excess[a] > 0.0) {
        ++violations;
        excess += ledger.excess[a];
      }
    }
  }
  CHECK(report.average_profit == doctest::Approx(profit / 6.0).epsilon(1e-12));
  CHECK(report.total_utility == doctest::Approx(util).epsilon(1e-12));
  CHECK(report.total_penalty == doctest::Approx(pen).epsilon(1e-12));
  CHECK(report.total_cost == doctest::Approx(cost).epsilon(1e-12));
  CHECK(report.violation_count == violations);
  CHECK(report.total_realized_excess == doctest::Approx(excess).epsilon(1e-12));
  CHECK(report.surrogate_out_of_range == 0);

  // Time-of-day curves: all MUs operational means a zero transit ratio.
  REQUIRE(report.transit_ratio_by_time_of_day.size() == 144);
  for (double r : report.transit_ratio_by_time_of_day) CHECK(r == 0.0);

  // Determinism: identical inputs give identical reports.
  const SimReport again = run_policy(w.scenario, w.trace, Policy::ST,
                                     artifacts, 42);
  CHECK(again.average_profit == report.average_profit);
  CHECK(again.total_penalty == report.total_penalty);

  PolicyArtifacts none;
  CHECK_THROWS_AS(run_policy(w.scenario, w.trace, Policy::ST, none, 42),
                  ArtifactError);
}

TEST_CASE("run_policy SP/MP/LP/GD: end-to-end decisions on a tiny world") {
  TinyWorld w = tiny_world(12);

  LstmArch arch;
  arch.hidden_size = 6;
  arch.output_size = 2;
  TrainConfig tc;
  tc.epochs = 40;
  tc.batch_size = 16;
  tc.learning_rate = 5e-3;
  tc.seed = 3;
  const WindowedDataset data = build_windows(w.normed, 4, 2);
  const VariationalParams bnn = train_variational(data, arch, tc);
  const PointParams point = train_point(data, arch, tc);

  SurrogateSweepSpec sweep_spec;
  sweep_spec.mu_max = 3.0;
  sweep_spec.sigma_max = 1.0;
  sweep_spec.z_max = 2;
  sweep_spec.epsilons = {0.05};
  sweep_spec.count = 300;
  SurrogateTrainConfig scfg;
  scfg.epochs = 40;
  scfg.hidden_sizes = {16, 16};
  const SurrogateParams surrogate =
      surrogate_train(surrogate_sweep(reference_model(), sweep_spec, 9), scfg);

  PolicyArtifacts artifacts;
  artifacts.bnn = &bnn;
  artifacts.point = &point;
  artifacts.surrogate = &surrogate;
  artifacts.normalizer = &w.norm;
  artifacts.train_trace = &w.trace;

  for (Policy policy : {Policy::SP, Policy::MP, Policy::LP, Policy::GD}) {
    CAPTURE(policy_name(policy));
    PhaseTimings timings;
    const SimReport report =
        run_policy(w.scenario, w.trace, policy, artifacts, 7, &timings);

    // Decisions happen at the end of steps L_in - 1 .. T - 2.
    CHECK(timings.decisions == 12 - 4);
    CHECK(report.action_log.size() == 8 * 2);
    int expected_step = 4;
    int seen_in_step = 0;
    for (const ActionLogEntry& e : report.action_log) {
      CHECK(e.step == expected_step);
      CHECK(e.mu_id == seen_in_step);
      CHECK((e.mode == "opt" || e.mode == "tra" || e.mode == "idl" ||
             e.mode == "none"));
      CHECK(e.location >= 0);
      CHECK(e.location < 2);
      if (++seen_in_step == 2) {
        seen_in_step = 0;
        ++expected_step;
      }
    }
    REQUIRE(report.ledgers.size() == 12);
    for (const StepLedger& ledger : report.ledgers)
      CHECK(ledger.z_opt + ledger.z_tra + ledger.z_idl == 2);

    // Identical seeds reproduce the run exactly.
    const SimReport again =
        run_policy(w.scenario, w.trace, policy, artifacts, 7);
    CHECK(again.average_profit == report.average_profit);
    CHECK(again.total_utility == report.total_utility);
    CHECK(again.violation_count == report.violation_count);
    REQUIRE(again.action_log.size() == report.action_log.size());
    for (std::size_t i = 0; i < report.action_log.size(); ++i) {
      CHECK(again.action_log[i].mode == report.action_log[i].mode);
      CHECK(again.action_log[i].destination ==
            report.action_log[i].destination);
    }

    if (policy == Policy::MP) CHECK(report.surrogate_out_of_range >= 0);
    if (policy == Policy::LP) CHECK(timings.risk_seconds >= 0.0);
  }
}

TEST_CASE("run_policy: artifact and input validation") {
  TinyWorld w = tiny_world(10);
  PolicyArtifacts artifacts;  // all null

  CHECK_THROWS_AS(run_policy(w.scenario, w.trace, Policy::SP, artifacts, 1),
                  ArtifactError);
  CHECK_THROWS_AS(run_policy(w.scenario, w.trace, Policy::LP, artifacts, 1),
                  ArtifactError);

  // A variational model with the wrong horizon is rejected up front.
  LstmArch arch;
  arch.hidden_size = 4;
  arch.output_size = 3;  // scenario horizon is 2
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 8;
  const WindowedDataset data = build_windows(w.normed, 4, 3);
  const VariationalParams bnn = train_variational(data, arch, tc);
  artifacts.bnn = &bnn;
  artifacts.normalizer = &w.norm;
  CHECK_THROWS_AS(run_policy(w.scenario, w.trace, Policy::SP, artifacts, 1),
                  ArtifactError);

  // MP additionally needs the surrogate.
  LstmArch ok_arch = arch;
  ok_arch.output_size = 2;
  const WindowedDataset ok_data = build_windows(w.normed, 4, 2);
  const VariationalParams ok_bnn = train_variational(ok_data, ok_arch, tc);
  artifacts.bnn = &ok_bnn;
  CHECK_THROWS_AS(run_policy(w.scenario, w.trace, Policy::MP, artifacts, 1),
                  ArtifactError);

  // Normalizer fitted on a different cell count.
  DemandTrace three = make_trace(Eigen::MatrixXd::Ones(6, 3));
  const Normalizer bad_norm = fit_normalizer(three);
  PolicyArtifacts mismatched;
  mismatched.bnn = &ok_bnn;
  mismatched.normalizer = &bad_norm;
  CHECK_THROWS_AS(run_policy(w.scenario, w.trace, Policy::SP, mismatched, 1),
                  ArtifactError);

  // The trace must outlast the warm-up window.
  PolicyArtifacts st;
  st.train_trace = &w.trace;
  DemandTrace short_trace = make_trace(Eigen::MatrixXd::Ones(4, 2));
  CHECK_THROWS_AS(run_policy(w.scenario, short_trace, Policy::ST, st, 1),
                  ValidationError);

  // Scenario-level validation propagates.
  ScenarioConfig bad = w.scenario;
  bad.transit = transit_uniform(3, 1);
  CHECK_THROWS_AS(run_policy(bad, w.trace, Policy::ST, st, 1),
                  ValidationError);
  bad = w.scenario;
  bad.initial_cells = {0};
  CHECK_THROWS_AS(run_policy(bad, w.trace, Policy::ST, st, 1),
                  ValidationError);
  bad = w.scenario;
  bad.epsilon = 1.0;
  CHECK_THROWS_AS(run_policy(bad, w.trace, Policy::ST, st, 1),
                  ValidationError);
}

TEST_CASE("run_policy: initial cells respected for non-ST policies") {
  TinyWorld w = tiny_world(6);
  w.scenario.num_mus = 2;
  w.scenario.initial_cells = {1, 1};

  // GD needs forecasts, so run a single decision round: trace length 6 with
  // warm-up 4 leaves decisions at t = 3 and 4.
  LstmArch arch;
  arch.hidden_size = 4;
  arch.output_size = 2;
  TrainConfig tc;
  tc.epochs = 10;
  tc.batch_size = 8;
  tc.seed = 2;
  const WindowedDataset data = build_windows(w.normed, 4, 2);
  const VariationalParams bnn = train_variational(data, arch, tc);

  PolicyArtifacts artifacts;
  artifacts.bnn = &bnn;
  artifacts.normalizer = &w.norm;

  const SimReport report = run_policy(w.scenario, w.trace, Policy::GD,
                                      artifacts, 5);
  // Before the first decision both MUs idle where they were placed.
  REQUIRE(!report.ledgers.empty());
  CHECK(report.ledgers[0].z_idl == 2);
  REQUIRE(!report.action_log.empty());
  CHECK(report.action_log[0].location == 1);
  CHECK(report.action_log[1].location == 1);
}

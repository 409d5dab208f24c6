#include "moedge/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace moedge {

void TransitMatrix::validate() const {
  if (steps.rows() != steps.cols() || steps.rows() < 1)
    throw ValidationError("transit matrix must be square and nonempty");
  for (int a = 0; a < steps.rows(); ++a) {
    if (steps(a, a) != 0)
      throw ValidationError("transit matrix diagonal must be 0");
    for (int b = 0; b < steps.cols(); ++b) {
      if (a != b && steps(a, b) < 1)
        throw ValidationError("off-diagonal transit times must be >= 1");
      if (steps(a, b) != steps(b, a))
        throw ValidationError("transit matrix must be symmetric");
    }
  }
}

TransitMatrix transit_uniform(int num_cells, int steps) {
  if (num_cells < 1 || steps < 1)
    throw ValidationError("transit_uniform needs positive sizes");
  TransitMatrix t;
  t.steps = Eigen::MatrixXi::Constant(num_cells, num_cells, steps);
  t.steps.diagonal().setZero();
  return t;
}

TransitMatrix transit_from_grid(int num_cells, int grid_side,
                                double cell_side_meters, double speed_kmh,
                                int step_minutes) {
  if (num_cells < 1 || grid_side < 1 || num_cells > grid_side * grid_side)
    throw ValidationError("cells must fit on the grid");
  if (!(cell_side_meters > 0.0) || !(speed_kmh > 0.0) || step_minutes < 1)
    throw ValidationError("bad grid transit parameters");
  const double meters_per_step = speed_kmh * 1000.0 / 60.0 * step_minutes;
  TransitMatrix t;
  t.steps = Eigen::MatrixXi::Zero(num_cells, num_cells);
  for (int a = 0; a < num_cells; ++a)
    for (int b = a + 1; b < num_cells; ++b) {
      const double dx = (a % grid_side - b % grid_side) * cell_side_meters;
      const double dy = (a / grid_side - b / grid_side) * cell_side_meters;
      const int steps = std::max(
          1, static_cast<int>(std::ceil(std::hypot(dx, dy) / meters_per_step)));
      t.steps(a, b) = t.steps(b, a) = steps;
    }
  return t;
}

double GainTable::transit_gain(int r, int steps) const {
  double total = 0.0;
  for (int j = 0; j < steps; ++j) total += std::pow(discount, r + j);
  return -transit_cost * total;
}

GainTable reward_gains(const CellValueModel& values,
                       const Eigen::MatrixXi& occupancy,
                       const PlannerCosts& costs, double discount) {
  if (!(discount > 0.0 && discount <= 1.0))
    throw ValidationError("discount must be in (0,1]");
  if (!(costs.c_opt >= 0.0 && costs.c_tra >= 0.0 && costs.c_idl >= 0.0))
    throw ValidationError("costs must be >= 0");
  const int cells = static_cast<int>(occupancy.rows());
  const int horizon = static_cast<int>(occupancy.cols());
  if (cells < 1 || horizon < 1)
    throw ValidationError("occupancy must be cells x horizon");
  GainTable g;
  g.transit_cost = costs.c_tra;
  g.discount = discount;
  g.opt_gain.resize(cells, horizon);
  g.idl_gain.resize(horizon);
  for (int h = 0; h < horizon; ++h) {
    const double eta_h = std::pow(discount, h);
    g.idl_gain[h] = -costs.c_idl * eta_h;
    for (int a = 0; a < cells; ++a) {
      const int z = occupancy(a, h);
      g.opt_gain(a, h) =
          (values.value(a, h, z + 1) - values.value(a, h, z) - costs.c_opt) *
          eta_h;
    }
  }
  return g;
}

PlanGraph build_plan_graph(const GainTable& gains, const TransitMatrix& transit,
                           int start_cell) {
  transit.validate();
  const int cells = gains.num_cells();
  const int horizon = gains.horizon();
  if (transit.num_cells() != cells)
    throw ValidationError("transit matrix size must match the gain table");
  if (start_cell < 0 || start_cell >= cells)
    throw ValidationError("start cell out of range");
  PlanGraph g;
  g.num_cells = cells;
  g.horizon = horizon;
  g.source_cell = start_cell;
  for (int r = 0; r < horizon; ++r)
    for (int a = 0; a < cells; ++a) {
      // Stay edge: the better of operating and idling, ties to idle.
      const bool operate = gains.opt_gain(a, r) > gains.idl_gain[r];
      const double gain =
          operate ? gains.opt_gain(a, r) : gains.idl_gain[r];
      g.edges.push_back({a, r, a, r + 1, -gain,
                         operate ? Mode::Operational : Mode::Idle});
      for (int b = 0; b < cells; ++b) {
        if (b == a) continue;
        const int steps = transit.at(a, b);
        if (r + steps > horizon) continue;  // beyond the horizon: omitted
        g.edges.push_back(
            {a, r, b, r + steps, -gains.transit_gain(r, steps), Mode::Transit});
      }
    }
  return g;
}

namespace {

struct NodeLabel {
  double dist = std::numeric_limits<double>::infinity();
  int pred_edge = -1;
  int transits = std::numeric_limits<int>::max();  // transit legs on the path
  int kind = 2;      // 0 stay, 1 transit; tie-break prefers stay
  int src_cell = -1;
};

}  // namespace

MuPlan min_length_path(const PlanGraph& graph) {
  const int cells = graph.num_cells;
  const int times = graph.horizon + 1;
  auto node_id = [&](int cell, int time) { return time * cells + cell; };
  std::vector<NodeLabel> labels(static_cast<std::size_t>(cells) * times);
  labels[node_id(graph.source_cell, 0)] = {0.0, -1, 0, 0, -1};

  // Edges are grouped by from_time, so one pass is a topological relaxation.
  // Equal-length paths resolve to the one with fewer transit legs, keeping
  // MUs parked when moving buys nothing.
  for (int e = 0; e < static_cast<int>(graph.edges.size()); ++e) {
    const auto& edge = graph.edges[e];
    const auto& from = labels[node_id(edge.from_cell, edge.from_time)];
    if (!std::isfinite(from.dist)) continue;
    auto& to = labels[node_id(edge.to_cell, edge.to_time)];
    const double cand = from.dist + edge.length;
    const int kind = edge.mode == Mode::Transit ? 1 : 0;
    const int transits = from.transits + kind;
    const bool better =
        cand < to.dist ||
        (cand == to.dist &&
         (transits < to.transits ||
          (transits == to.transits &&
           (kind < to.kind ||
            (kind == to.kind && edge.from_cell < to.src_cell)))));
    if (better) to = {cand, e, transits, kind, edge.from_cell};
  }

  int terminal = -1;
  for (int a = 0; a < cells; ++a) {
    const auto& label = labels[node_id(a, graph.horizon)];
    if (!std::isfinite(label.dist)) continue;
    if (terminal < 0) {
      terminal = a;
      continue;
    }
    const auto& best = labels[node_id(terminal, graph.horizon)];
    if (label.dist < best.dist ||
        (label.dist == best.dist && label.transits < best.transits))
      terminal = a;  // remaining ties keep the lower cell id
  }
  if (terminal < 0) throw Error("plan graph has no reachable terminal node");

  MuPlan plan;
  plan.total_gain = -labels[node_id(terminal, graph.horizon)].dist;
  int cell = terminal, time = graph.horizon;
  plan.path.push_back({cell, time});
  while (time > 0) {
    const auto& label = labels[node_id(cell, time)];
    const auto& edge = graph.edges[label.pred_edge];
    plan.modes.push_back(edge.mode);
    cell = edge.from_cell;
    time = edge.from_time;
    plan.path.push_back({cell, time});
  }
  std::reverse(plan.path.begin(), plan.path.end());
  std::reverse(plan.modes.begin(), plan.modes.end());
  plan.first_action.no_action = false;
  plan.first_action.mode = plan.modes.front();
  plan.first_action.destination =
      plan.modes.front() == Mode::Transit ? plan.path[1].cell : -1;
  return plan;
}

namespace {

void commit_plan(const MuPlan& plan, Eigen::MatrixXi& occupancy) {
  for (std::size_t e = 0; e < plan.modes.size(); ++e)
    if (plan.modes[e] == Mode::Operational)
      occupancy(plan.path[e].cell, plan.path[e].time)++;
}

MuPlan plan_one(const CellValueModel& values, const TransitMatrix& transit,
                const PlannerCosts& costs, double discount,
                const Eigen::MatrixXi& occupancy, const SchedulableMu& mu) {
  const GainTable gains = reward_gains(values, occupancy, costs, discount);
  MuPlan plan = min_length_path(build_plan_graph(gains, transit, mu.cell));
  plan.mu_id = mu.id;
  return plan;
}

}  // namespace

std::vector<MuPlan> plan_multi(const CellValueModel& values,
                               const TransitMatrix& transit,
                               const PlannerCosts& costs, double discount,
                               int horizon,
                               const std::vector<SchedulableMu>& mus,
                               Eigen::MatrixXi occupancy, PlanOrder order) {
  transit.validate();
  if (occupancy.rows() != transit.num_cells() || occupancy.cols() != horizon)
    throw ValidationError("occupancy must be cells x horizon");
  std::vector<MuPlan> plans;
  if (order == PlanOrder::Fixed) {
    for (const auto& mu : mus) {
      plans.push_back(plan_one(values, transit, costs, discount, occupancy, mu));
      commit_plan(plans.back(), occupancy);
    }
    return plans;
  }
  // Greedy order: repeatedly commit one remaining MU, then refresh gains.
  // Ranking candidates by their own path reward alone lets an MU hog a
  // contested prize that a rival needs more (its alternative is worse), so
  // each candidate is scored with a one-step rollout: its own reward plus
  // the best reward any other remaining MU can still earn after the
  // candidate's plan is committed.  Score ties go to caller order.
  std::vector<SchedulableMu> remaining = mus;
  std::vector<MuPlan> committed;
  while (!remaining.empty()) {
    std::vector<MuPlan> round;
    round.reserve(remaining.size());
    for (const auto& mu : remaining)
      round.push_back(plan_one(values, transit, costs, discount, occupancy, mu));
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < round.size(); ++i) {
      double score = round[i].total_gain;
      if (remaining.size() > 1) {
        Eigen::MatrixXi trial = occupancy;
        commit_plan(round[i], trial);
        double next_best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < remaining.size(); ++j) {
          if (j == i) continue;
          next_best = std::max(
              next_best,
              plan_one(values, transit, costs, discount, trial, remaining[j])
                  .total_gain);
        }
        score += next_best;
      }
      const double tie_tol = 1e-9 * std::max(1.0, std::abs(best_score));
      if (i == 0 || score > best_score + tie_tol) {
        best = static_cast<int>(i);
        best_score = score;
      }
    }
    MuPlan best_plan = std::move(round[best]);
    commit_plan(best_plan, occupancy);
    committed.push_back(std::move(best_plan));
    remaining.erase(remaining.begin() + best);
  }
  // Return in the callers' MU order.
  for (const auto& mu : mus)
    for (auto& p : committed)
      if (p.mu_id == mu.id) plans.push_back(std::move(p));
  return plans;
}

std::vector<MuAction> extract_next_actions(const std::vector<MuPlan>& plans) {
  std::vector<MuAction> actions;
  actions.reserve(plans.size());
  for (const auto& p : plans) actions.push_back(p.first_action);
  return actions;
}

std::string plan_graph_to_json(const PlanGraph& graph,
                               const std::vector<MuPlan>& plans) {
  nlohmann::json j;
  j["num_cells"] = graph.num_cells;
  j["horizon"] = graph.horizon;
  j["source_cell"] = graph.source_cell;
  auto& edges = j["edges"] = nlohmann::json::array();
  for (const auto& e : graph.edges)
    edges.push_back({{"from", {e.from_cell, e.from_time}},
                     {"to", {e.to_cell, e.to_time}},
                     {"length", e.length},
                     {"mode", mode_name(e.mode)}});
  auto& paths = j["plans"] = nlohmann::json::array();
  for (const auto& p : plans) {
    nlohmann::json jp;
    jp["mu_id"] = p.mu_id;
    jp["total_gain"] = p.total_gain;
    auto& nodes = jp["path"] = nlohmann::json::array();
    for (const auto& n : p.path) nodes.push_back({n.cell, n.time});
    auto& modes = jp["modes"] = nlohmann::json::array();
    for (Mode m : p.modes) modes.push_back(mode_name(m));
    paths.push_back(std::move(jp));
  }
  return j.dump(2);
}

}  // namespace moedge

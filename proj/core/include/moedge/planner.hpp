#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "moedge/common.hpp"

namespace moedge {

/// Inter-cell transit times in whole steps.
struct TransitMatrix {
  Eigen::MatrixXi steps;  // symmetric, zero diagonal, >= 1 off-diagonal

  int num_cells() const { return static_cast<int>(steps.rows()); }
  int at(int a, int b) const { return steps(a, b); }
  void validate() const;
};

TransitMatrix transit_uniform(int num_cells, int steps);

/// Cells laid out row-major on a square grid; transit time is centroid
/// distance over speed, rounded up to whole steps (at least 1).
TransitMatrix transit_from_grid(int num_cells, int grid_side,
                                double cell_side_meters, double speed_kmh,
                                int step_minutes);

/// Expected utility minus expected penalty of one (cell, horizon step) at a
/// given operational MU count; implemented by the risk engines and by test
/// oracles.
class CellValueModel {
 public:
  virtual ~CellValueModel() = default;
  /// h is the 0-based horizon offset: absolute step t+1+h.
  virtual double value(int cell, int h, int z) const = 0;
};

struct PlannerCosts {
  double c_opt = 0.0;
  double c_tra = 0.0;
  double c_idl = 0.0;
};

/// Discounted reward gains at the occupancy the table was built with.
struct GainTable {
  Eigen::MatrixXd opt_gain;  // cells x horizon
  Eigen::VectorXd idl_gain;  // horizon
  double transit_cost = 0.0;
  double discount = 1.0;

  int num_cells() const { return static_cast<int>(opt_gain.rows()); }
  int horizon() const { return static_cast<int>(opt_gain.cols()); }
  /// Gain (<= 0) of a transit departing a node at relative time r and
  /// traversing `steps` steps, each discounted at its own step.
  double transit_gain(int r, int steps) const;
};

GainTable reward_gains(const CellValueModel& values,
                       const Eigen::MatrixXi& occupancy,
                       const PlannerCosts& costs, double discount);

struct PlanEdge {
  int from_cell, from_time;  // times relative to t: 0 .. horizon
  int to_cell, to_time;
  double length;  // = -gain
  Mode mode;      // Operational/Idle for stay edges, Transit otherwise
};

struct PlanGraph {
  int num_cells = 0;
  int horizon = 0;
  int source_cell = 0;
  std::vector<PlanEdge> edges;  // sorted by (from_time, from_cell)
};

PlanGraph build_plan_graph(const GainTable& gains, const TransitMatrix& transit,
                           int start_cell);

struct PlanNode {
  int cell = 0;
  int time = 0;
};

struct MuAction {
  bool no_action = false;  // ⊥ for in-transit MUs
  Mode mode = Mode::Idle;
  int destination = -1;  // target cell for Transit, -1 otherwise
};

struct MuPlan {
  int mu_id = -1;
  std::vector<PlanNode> path;  // source .. terminal
  std::vector<Mode> modes;     // one per edge
  MuAction first_action;
  double total_gain = 0.0;  // negative path length
};

/// Exact shortest path from the source to any node at the final time via one
/// topological relaxation; ties prefer the path with fewer transit legs (so
/// indifferent MUs stay parked), then stay edges, then the lower source
/// cell, and finally the terminal with the lower cell id.
MuPlan min_length_path(const PlanGraph& graph);

enum class PlanOrder { Fixed, Greedy };

struct SchedulableMu {
  int id = 0;
  int cell = 0;
};

/// Sequential multi-MU planning: each committed plan's operational
/// placements increment the occupancy used for the next MU.  `occupancy`
/// (cells x horizon) carries pre-committed contributions of in-transit MUs.
/// With PlanOrder::Greedy each round commits the MU maximizing its own
/// path reward plus the best reward any other remaining MU can still earn
/// afterwards (a one-step rollout, so an MU does not hog a contested prize
/// a rival needs more); score ties go to caller order.
std::vector<MuPlan> plan_multi(const CellValueModel& values,
                               const TransitMatrix& transit,
                               const PlannerCosts& costs, double discount,
                               int horizon,
                               const std::vector<SchedulableMu>& mus,
                               Eigen::MatrixXi occupancy, PlanOrder order);

std::vector<MuAction> extract_next_actions(const std::vector<MuPlan>& plans);

/// Debug dump of the graph and chosen paths.
std::string plan_graph_to_json(const PlanGraph& graph,
                               const std::vector<MuPlan>& plans);

}  // namespace moedge

#include "moedge/report.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "moedge/io.hpp"

namespace moedge {

namespace {

using nlohmann::json;

double require_number(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key) || !j[key].is_number())
    throw SchemaError(where + ": missing numeric field '" + std::string(key) +
                      "'");
  return j[key].get<double>();
}

std::vector<double> require_double_array(const json& j, const std::string& where,
                                         const char* key) {
  if (!j.contains(key) || !j[key].is_array())
    throw SchemaError(where + ": missing array field '" + std::string(key) + "'");
  std::vector<double> out;
  for (const auto& v : j[key]) {
    if (!v.is_number())
      throw SchemaError(where + ": field '" + std::string(key) +
                        "' must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::string sim_report_to_json(const SimReport& report) {
  json j{{"schema_version", kReportSchemaVersion},
         {"policy", report.policy},
         {"seed", report.seed},
         {"num_cells", report.num_cells},
         {"num_mus", report.num_mus},
         {"penalty_constant", report.penalty_constant},
         {"epsilon", report.epsilon},
         {"input_window", report.input_window},
         {"horizon", report.horizon},
         {"step_minutes", report.step_minutes},
         {"total_steps", report.total_steps},
         {"warmup_steps", report.warmup_steps},
         {"measured_steps", report.measured_steps},
         {"average_profit", report.average_profit},
         {"total_utility", report.total_utility},
         {"total_penalty", report.total_penalty},
         {"total_cost", report.total_cost},
         {"violation_count", report.violation_count},
         {"total_realized_excess", report.total_realized_excess},
         {"surrogate_out_of_range", report.surrogate_out_of_range},
         {"transit_ratio_by_time_of_day", report.transit_ratio_by_time_of_day},
         {"mean_demand_by_time_of_day", report.mean_demand_by_time_of_day}};
  return j.dump(2) + "\n";
}

SimReport sim_report_from_json(const std::string& text,
                               const std::string& source_name) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(source_name + ": invalid JSON: " + e.what());
  }
  if (!j.is_object())
    throw SchemaError(source_name + ": expected a JSON object");
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer())
    throw SchemaError(source_name + ": missing schema_version");
  const int version = j["schema_version"].get<int>();
  if (version != kReportSchemaVersion)
    throw SchemaError(source_name + ": unsupported report schema version " +
                      std::to_string(version) + " (expected " +
                      std::to_string(kReportSchemaVersion) + ")");
  SimReport r;
  if (!j.contains("policy") || !j["policy"].is_string())
    throw SchemaError(source_name + ": missing field 'policy'");
  r.policy = j["policy"].get<std::string>();
  r.seed = static_cast<std::uint64_t>(require_number(j, source_name, "seed"));
  r.num_cells = static_cast<int>(require_number(j, source_name, "num_cells"));
  r.num_mus = static_cast<int>(require_number(j, source_name, "num_mus"));
  r.penalty_constant = require_number(j, source_name, "penalty_constant");
  r.epsilon = require_number(j, source_name, "epsilon");
  r.input_window = static_cast<int>(require_number(j, source_name, "input_window"));
  r.horizon = static_cast<int>(require_number(j, source_name, "horizon"));
  r.step_minutes = static_cast<int>(require_number(j, source_name, "step_minutes"));
  r.total_steps = static_cast<int>(require_number(j, source_name, "total_steps"));
  r.warmup_steps = static_cast<int>(require_number(j, source_name, "warmup_steps"));
  r.measured_steps =
      static_cast<int>(require_number(j, source_name, "measured_steps"));
  r.average_profit = require_number(j, source_name, "average_profit");
  r.total_utility = require_number(j, source_name, "total_utility");
  r.total_penalty = require_number(j, source_name, "total_penalty");
  r.total_cost = require_number(j, source_name, "total_cost");
  r.violation_count =
      static_cast<int>(require_number(j, source_name, "violation_count"));
  r.total_realized_excess =
      require_number(j, source_name, "total_realized_excess");
  r.surrogate_out_of_range =
      static_cast<int>(require_number(j, source_name, "surrogate_out_of_range"));
  r.transit_ratio_by_time_of_day =
      require_double_array(j, source_name, "transit_ratio_by_time_of_day");
  r.mean_demand_by_time_of_day =
      require_double_array(j, source_name, "mean_demand_by_time_of_day");
  return r;
}

void save_sim_report(const SimReport& report,
                     const std::filesystem::path& path) {
  write_text_file(path, sim_report_to_json(report));
}

SimReport load_sim_report(const std::filesystem::path& path) {
  return sim_report_from_json(read_text_file(path), path.filename().string());
}

std::string ledger_csv(const SimReport& report) {
  std::string out =
      "step,utility,penalty,excess,violations,cost,profit,z_opt,z_tra,z_idl\n";
  for (const StepLedger& l : report.ledgers) {
    double utility = 0.0, penalty = 0.0, excess = 0.0;
    int violations = 0;
    for (std::size_t a = 0; a < l.utility.size(); ++a) {
      utility += l.utility[a];
      penalty += l.penalty[a];
      if (l.excess[a] > 0.0) {
        excess += l.excess[a];
        ++violations;
      }
    }
    out += std::to_string(l.step) + "," + format_double(utility) + "," +
           format_double(penalty) + "," + format_double(excess) + "," +
           std::to_string(violations) + "," + format_double(l.cost) + "," +
           format_double(l.profit) + "," + std::to_string(l.z_opt) + "," +
           std::to_string(l.z_tra) + "," + std::to_string(l.z_idl) + "\n";
  }
  return out;
}

std::string action_log_csv(const SimReport& report) {
  std::string out = "step,mu_id,mode,location,destination\n";
  for (const ActionLogEntry& e : report.action_log)
    out += std::to_string(e.step) + "," + std::to_string(e.mu_id) + "," +
           e.mode + "," + std::to_string(e.location) + "," +
           std::to_string(e.destination) + "\n";
  return out;
}

std::string timings_json(const PhaseTimings& t) {
  const double total = t.forecast_seconds + t.risk_seconds + t.plan_seconds;
  json j{{"forecast_seconds", t.forecast_seconds},
         {"risk_seconds", t.risk_seconds},
         {"plan_seconds", t.plan_seconds},
         {"decisions", t.decisions},
         {"mean_decision_seconds", t.decisions > 0 ? total / t.decisions : 0.0}};
  return j.dump(2) + "\n";
}

namespace {

/// Maps (x, y) series into one SVG polyline inside the given frame.
std::string svg_polyline(const std::vector<double>& xs,
                         const std::vector<double>& ys, double x0, double y0,
                         double width, double height, double x_min,
                         double x_max, double y_min, double y_max,
                         const std::string& color) {
  if (xs.empty()) return "";
  const double x_span = x_max > x_min ? x_max - x_min : 1.0;
  const double y_span = y_max > y_min ? y_max - y_min : 1.0;
  std::string points;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double px = x0 + (xs[i] - x_min) / x_span * width;
    const double py = y0 + height - (ys[i] - y_min) / y_span * height;
    points += format_double(std::round(px * 100.0) / 100.0) + "," +
              format_double(std::round(py * 100.0) / 100.0) + " ";
  }
  if (!points.empty()) points.pop_back();
  return "  <polyline fill=\"none\" stroke=\"" + color +
         "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string unique_column(const std::string& base,
                          std::vector<std::string>& used) {
  std::string name = base;
  int suffix = 2;
  while (std::find(used.begin(), used.end(), name) != used.end())
    name = base + "_" + std::to_string(suffix++);
  used.push_back(name);
  return name;
}

}  // namespace

ReportOutputs build_report_outputs(const std::vector<SimReport>& reports) {
  if (reports.empty())
    throw ValidationError("report: at least one simulation report required");
  ReportOutputs out;

  out.comparison_csv =
      "policy,seed,average_profit,total_utility,total_penalty,total_cost,"
      "violation_count,total_realized_excess,surrogate_out_of_range,"
      "measured_steps\n";
  for (const SimReport& r : reports)
    out.comparison_csv +=
        r.policy + "," + std::to_string(r.seed) + "," +
        format_double(r.average_profit) + "," + format_double(r.total_utility) +
        "," + format_double(r.total_penalty) + "," +
        format_double(r.total_cost) + "," + std::to_string(r.violation_count) +
        "," + format_double(r.total_realized_excess) + "," +
        std::to_string(r.surrogate_out_of_range) + "," +
        std::to_string(r.measured_steps) + "\n";

  std::vector<std::size_t> by_penalty(reports.size());
  std::iota(by_penalty.begin(), by_penalty.end(), 0);
  std::stable_sort(by_penalty.begin(), by_penalty.end(),
                   [&reports](std::size_t a, std::size_t b) {
                     return reports[a].penalty_constant <
                            reports[b].penalty_constant;
                   });
  out.penalty_sweep_csv =
      "penalty_constant,policy,average_profit,total_realized_excess,"
      "violation_count\n";
  for (std::size_t i : by_penalty)
    out.penalty_sweep_csv += format_double(reports[i].penalty_constant) + "," +
                             reports[i].policy + "," +
                             format_double(reports[i].average_profit) + "," +
                             format_double(reports[i].total_realized_excess) +
                             "," + std::to_string(reports[i].violation_count) +
                             "\n";

  // Transit-ratio-vs-demand table: slots of the first report's day length.
  const std::size_t slots = reports[0].transit_ratio_by_time_of_day.size();
  std::vector<std::string> columns{"slot", "mean_demand"};
  std::string header = "slot,mean_demand";
  for (const SimReport& r : reports)
    header += "," + unique_column("transit_ratio_" + r.policy, columns);
  out.action_mode_csv = header + "\n";
  for (std::size_t s = 0; s < slots; ++s) {
    out.action_mode_csv +=
        std::to_string(s) + "," +
        format_double(reports[0].mean_demand_by_time_of_day[s]);
    for (const SimReport& r : reports) {
      const double ratio = s < r.transit_ratio_by_time_of_day.size()
                               ? r.transit_ratio_by_time_of_day[s]
                               : 0.0;
      out.action_mode_csv += "," + format_double(ratio);
    }
    out.action_mode_csv += "\n";
  }

  // Static plot: left frame transit ratios over the day, right frame the
  // penalty sweep (average profit vs penalty constant).
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"880\" height=\"360\" "
      "viewBox=\"0 0 880 360\">\n"
      "  <rect x=\"0\" y=\"0\" width=\"880\" height=\"360\" fill=\"white\"/>\n"
      "  <rect x=\"40\" y=\"30\" width=\"360\" height=\"280\" fill=\"none\" "
      "stroke=\"#444444\"/>\n"
      "  <rect x=\"480\" y=\"30\" width=\"360\" height=\"280\" fill=\"none\" "
      "stroke=\"#444444\"/>\n"
      "  <text x=\"220\" y=\"20\" text-anchor=\"middle\" font-size=\"13\" "
      "font-family=\"sans-serif\">transit ratio by time of day</text>\n"
      "  <text x=\"660\" y=\"20\" text-anchor=\"middle\" font-size=\"13\" "
      "font-family=\"sans-serif\">average profit vs penalty constant</text>\n";
  if (slots > 1) {
    std::vector<double> xs(slots);
    std::iota(xs.begin(), xs.end(), 0.0);
    double demand_max = 0.0;
    for (double v : reports[0].mean_demand_by_time_of_day)
      demand_max = std::max(demand_max, v);
    std::vector<double> demand_scaled;
    for (double v : reports[0].mean_demand_by_time_of_day)
      demand_scaled.push_back(demand_max > 0.0 ? v / demand_max : 0.0);
    svg += svg_polyline(xs, demand_scaled, 40, 30, 360, 280, 0,
                        static_cast<double>(slots - 1), 0.0, 1.0, "#bbbbbb");
    for (std::size_t i = 0; i < reports.size(); ++i)
      svg += svg_polyline(xs, reports[i].transit_ratio_by_time_of_day, 40, 30,
                          360, 280, 0, static_cast<double>(slots - 1), 0.0, 1.0,
                          kPalette[i % 8]);
  }
  if (by_penalty.size() > 1) {
    std::vector<double> px, py;
    for (std::size_t i : by_penalty) {
      px.push_back(reports[i].penalty_constant);
      py.push_back(reports[i].average_profit);
    }
    const double x_min = *std::min_element(px.begin(), px.end());
    const double x_max = *std::max_element(px.begin(), px.end());
    const double y_min = *std::min_element(py.begin(), py.end());
    const double y_max = *std::max_element(py.begin(), py.end());
    svg += svg_polyline(px, py, 480, 30, 360, 280, x_min, x_max, y_min, y_max,
                        "#1f77b4");
  }
  svg += "</svg>\n";
  out.plot_svg = svg;
  return out;
}

}  // namespace moedge

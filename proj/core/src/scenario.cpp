#include "moedge/scenario.hpp"

#include <cmath>
#include <initializer_list>
#include <json.hpp>
#include <string>
#include <vector>

#include "moedge/io.hpp"

namespace moedge {

namespace {

using nlohmann::json;

/// Rejects keys outside the documented schema so typos fail loudly.
void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw ConfigError(where + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) { known = true; break; }
    if (!known)
      throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

double get_number(const json& j, const std::string& where, const char* key,
                  double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number())
    throw ConfigError(where + "." + key + ": expected a number");
  return j[key].get<double>();
}

int get_int(const json& j, const std::string& where, const char* key,
            int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer())
    throw ConfigError(where + "." + key + ": expected an integer");
  return j[key].get<int>();
}

std::string get_string(const json& j, const std::string& where, const char* key,
                       const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string())
    throw ConfigError(where + "." + key + ": expected a string");
  return j[key].get<std::string>();
}

std::vector<double> get_double_array(const json& j, const std::string& where,
                                     const char* key,
                                     const std::vector<double>& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_array())
    throw ConfigError(where + "." + key + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j[key]) {
    if (!v.is_number())
      throw ConfigError(where + "." + key + ": expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<int> get_int_array(const json& j, const std::string& where,
                               const char* key,
                               const std::vector<int>& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_array())
    throw ConfigError(where + "." + key + ": expected an array of integers");
  std::vector<int> out;
  for (const auto& v : j[key]) {
    if (!v.is_number_integer())
      throw ConfigError(where + "." + key + ": expected an array of integers");
    out.push_back(v.get<int>());
  }
  return out;
}

ResourceModel parse_resource_model(const json& j, const std::string& where,
                                   const ResourceModel& fallback) {
  check_keys(j, where, {"r", "phi", "varphi", "g", "u", "u_base"});
  ResourceModel rm;
  rm.r = get_double_array(j, where, "r", fallback.r);
  rm.phi = get_double_array(j, where, "phi", fallback.phi);
  rm.varphi = get_double_array(j, where, "varphi", fallback.varphi);
  rm.g = get_double_array(j, where, "g", fallback.g);
  rm.u = get_double_array(j, where, "u", fallback.u);
  rm.u_base = get_number(j, where, "u_base", fallback.u_base);
  return rm;
}

void parse_transit_spec(const json& j, const std::string& where,
                        TransitSpec& spec) {
  check_keys(j, where, {"kind", "steps", "cell_side_meters", "speed_kmh"});
  const std::string kind = get_string(j, where, "kind", "grid");
  if (kind == "uniform") {
    spec.kind = TransitSpec::Kind::Uniform;
  } else if (kind == "grid") {
    spec.kind = TransitSpec::Kind::Grid;
  } else {
    throw ConfigError(where + ".kind: expected 'uniform' or 'grid'");
  }
  spec.uniform_steps = get_int(j, where, "steps", spec.uniform_steps);
  spec.cell_side_meters =
      get_number(j, where, "cell_side_meters", spec.cell_side_meters);
  spec.speed_kmh = get_number(j, where, "speed_kmh", spec.speed_kmh);
}

void parse_scenario(const json& j, const std::string& where, RunConfig& cfg) {
  check_keys(j, where,
             {"num_cells", "num_mus", "resource_model", "costs",
              "penalty_constant", "epsilon", "discount", "input_window",
              "horizon", "forecast_samples", "step_minutes", "transit",
              "initial_cells", "plan_order"});
  ScenarioConfig& sc = cfg.scenario;
  const int num_cells =
      get_int(j, where, "num_cells", static_cast<int>(sc.cell_models.size()));
  if (num_cells < 1) throw ConfigError(where + ".num_cells: must be >= 1");
  ResourceModel rm = sc.cell_models.front();
  if (j.contains("resource_model"))
    rm = parse_resource_model(j["resource_model"], where + ".resource_model", rm);
  sc.cell_models.assign(num_cells, rm);
  sc.num_mus = get_int(j, where, "num_mus", sc.num_mus);
  if (j.contains("costs")) {
    const json& c = j["costs"];
    const std::string cw = where + ".costs";
    check_keys(c, cw, {"c_opt", "c_tra", "c_idl"});
    sc.costs.c_opt = get_number(c, cw, "c_opt", sc.costs.c_opt);
    sc.costs.c_tra = get_number(c, cw, "c_tra", sc.costs.c_tra);
    sc.costs.c_idl = get_number(c, cw, "c_idl", sc.costs.c_idl);
  }
  sc.penalty_constant =
      get_number(j, where, "penalty_constant", sc.penalty_constant);
  sc.epsilon = get_number(j, where, "epsilon", sc.epsilon);
  sc.discount = get_number(j, where, "discount", sc.discount);
  sc.input_window = get_int(j, where, "input_window", sc.input_window);
  sc.horizon = get_int(j, where, "horizon", sc.horizon);
  sc.forecast_samples =
      get_int(j, where, "forecast_samples", sc.forecast_samples);
  sc.step_minutes = get_int(j, where, "step_minutes", sc.step_minutes);
  if (j.contains("transit"))
    parse_transit_spec(j["transit"], where + ".transit", cfg.transit_spec);
  sc.initial_cells = get_int_array(j, where, "initial_cells", sc.initial_cells);
  const std::string order = get_string(j, where, "plan_order", "fixed");
  if (order == "fixed") {
    sc.plan_order = PlanOrder::Fixed;
  } else if (order == "greedy") {
    sc.plan_order = PlanOrder::Greedy;
  } else {
    throw ConfigError(where + ".plan_order: expected 'fixed' or 'greedy'");
  }
}

void parse_trace(const json& j, const std::string& where, TraceSpec& spec) {
  check_keys(j, where, {"source", "csv_path", "grid", "top_k", "split",
                        "synthetic"});
  const std::string source = get_string(j, where, "source", "synthetic");
  if (source == "synthetic") {
    spec.source = TraceSpec::Source::Synthetic;
  } else if (source == "csv") {
    spec.source = TraceSpec::Source::Csv;
  } else {
    throw ConfigError(where + ".source: expected 'synthetic' or 'csv'");
  }
  spec.csv_path = get_string(j, where, "csv_path", spec.csv_path.string());
  if (spec.source == TraceSpec::Source::Csv && spec.csv_path.empty())
    throw ConfigError(where + ".csv_path: required when source is 'csv'");
  if (j.contains("grid")) {
    const json& g = j["grid"];
    const std::string gw = where + ".grid";
    check_keys(g, gw, {"source_side_cells", "merge_factor", "cell_side_meters"});
    spec.has_grid = true;
    spec.grid.source_side_cells =
        get_int(g, gw, "source_side_cells", spec.grid.source_side_cells);
    spec.grid.merge_factor = get_int(g, gw, "merge_factor", spec.grid.merge_factor);
    spec.grid.cell_side_meters =
        get_number(g, gw, "cell_side_meters", spec.grid.cell_side_meters);
  }
  spec.top_k = get_int(j, where, "top_k", spec.top_k);
  if (j.contains("split")) {
    const json& s = j["split"];
    const std::string sw = where + ".split";
    check_keys(s, sw, {"d1", "d2", "d3"});
    spec.split.d1_steps = get_int(s, sw, "d1", spec.split.d1_steps);
    spec.split.d2_steps = get_int(s, sw, "d2", spec.split.d2_steps);
    spec.split.d3_steps = get_int(s, sw, "d3", spec.split.d3_steps);
  }
  if (j.contains("synthetic")) {
    const json& s = j["synthetic"];
    const std::string sw = where + ".synthetic";
    check_keys(s, sw, {"profile", "num_steps", "base", "amplitude",
                       "period_steps", "noise_sd", "phase_per_cell"});
    SyntheticProfile& p = spec.synthetic.profile;
    p.kind = profile_kind_from_name(
        get_string(s, sw, "profile", profile_kind_name(p.kind)));
    spec.synthetic.num_steps =
        get_int(s, sw, "num_steps", spec.synthetic.num_steps);
    p.base = get_number(s, sw, "base", p.base);
    p.amplitude = get_number(s, sw, "amplitude", p.amplitude);
    p.period_steps = get_int(s, sw, "period_steps", p.period_steps);
    p.noise_sd = get_number(s, sw, "noise_sd", p.noise_sd);
    p.phase_per_cell = get_number(s, sw, "phase_per_cell", p.phase_per_cell);
  }
}

void parse_train(const json& j, const std::string& where, RunConfig& cfg) {
  check_keys(j, where, {"epochs", "batch_size", "learning_rate", "hidden_size",
                        "mc_train_samples", "prior_sd"});
  cfg.train.epochs = get_int(j, where, "epochs", cfg.train.epochs);
  cfg.train.batch_size = get_int(j, where, "batch_size", cfg.train.batch_size);
  cfg.train.learning_rate =
      get_number(j, where, "learning_rate", cfg.train.learning_rate);
  cfg.hidden_size = get_int(j, where, "hidden_size", cfg.hidden_size);
  cfg.train.mc_train_samples =
      get_int(j, where, "mc_train_samples", cfg.train.mc_train_samples);
  cfg.train.prior_sd = get_number(j, where, "prior_sd", cfg.train.prior_sd);
}

void parse_surrogate(const json& j, const std::string& where, RunConfig& cfg) {
  check_keys(j, where,
             {"count", "mu_max", "sigma_max", "z_max", "epsilons", "epochs",
              "batch_size", "learning_rate", "holdout_fraction",
              "hidden_sizes"});
  cfg.sweep.count = get_int(j, where, "count", cfg.sweep.count);
  cfg.sweep.mu_max = get_number(j, where, "mu_max", cfg.sweep.mu_max);
  cfg.sweep.sigma_max = get_number(j, where, "sigma_max", cfg.sweep.sigma_max);
  cfg.sweep.z_max = get_int(j, where, "z_max", cfg.sweep.z_max);
  cfg.sweep.epsilons =
      get_double_array(j, where, "epsilons", cfg.sweep.epsilons);
  cfg.surrogate.epochs = get_int(j, where, "epochs", cfg.surrogate.epochs);
  cfg.surrogate.batch_size =
      get_int(j, where, "batch_size", cfg.surrogate.batch_size);
  cfg.surrogate.learning_rate =
      get_number(j, where, "learning_rate", cfg.surrogate.learning_rate);
  cfg.surrogate.holdout_fraction =
      get_number(j, where, "holdout_fraction", cfg.surrogate.holdout_fraction);
  cfg.surrogate.hidden_sizes =
      get_int_array(j, where, "hidden_sizes", cfg.surrogate.hidden_sizes);
}

}  // namespace

TransitMatrix build_transit(const TransitSpec& spec, int num_cells,
                            int step_minutes) {
  if (spec.kind == TransitSpec::Kind::Uniform)
    return transit_uniform(num_cells, spec.uniform_steps);
  const int side =
      static_cast<int>(std::ceil(std::sqrt(static_cast<double>(num_cells))));
  return transit_from_grid(num_cells, side, spec.cell_side_meters,
                           spec.speed_kmh, step_minutes);
}

RunConfig default_run_config() {
  RunConfig cfg;
  ResourceModel rm;
  rm.r = {16.0, 2.0, 24.0};
  rm.phi = {0.0, 0.0, 10.0};
  rm.varphi = {8.0, 1.0, 8.0};
  rm.g = {16.0, 2.0, 32.0};
  rm.u = {1.0, 1.0, 1.0};
  rm.u_base = -100.0;
  cfg.scenario.cell_models.assign(10, rm);
  return cfg;
}

RunConfig parse_run_config(const std::string& text,
                           const std::string& source_name) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source_name + ": invalid JSON: " + e.what());
  }
  RunConfig cfg = default_run_config();
  try {
    check_keys(j, source_name, {"scenario", "trace", "train", "surrogate"});
    if (j.contains("scenario"))
      parse_scenario(j["scenario"], source_name + ": scenario", cfg);
    if (j.contains("trace"))
      parse_trace(j["trace"], source_name + ": trace", cfg.trace);
    if (j.contains("train"))
      parse_train(j["train"], source_name + ": train", cfg);
    if (j.contains("surrogate"))
      parse_surrogate(j["surrogate"], source_name + ": surrogate", cfg);
  } catch (const json::exception& e) {
    throw ConfigError(source_name + ": " + e.what());
  }
  cfg.scenario.transit = build_transit(
      cfg.transit_spec, cfg.scenario.num_cells(), cfg.scenario.step_minutes);
  cfg.scenario.validate();
  cfg.train.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw ConfigError("config file not found: " + path.string());
  return parse_run_config(read_text_file(path), path.filename().string());
}

}  // namespace moedge

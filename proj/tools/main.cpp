// moedge: command-line front end for the moving-edge scheduling pipeline.
//
// Subcommands: ingest (build/split the demand trace), train (predictors and
// the risk surrogate), simulate (run one policy over the test split), and
// report (cross-run comparison tables and plots).  Exit codes: 0 success,
// 2 invalid config/input, 3 training divergence, 4 missing/mismatched
// artifact, 5 report schema mismatch, 1 unexpected error.

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "moedge/checkpoint.hpp"
#include "moedge/io.hpp"
#include "moedge/report.hpp"
#include "moedge/rng.hpp"
#include "moedge/scenario.hpp"
#include "moedge/sim.hpp"

namespace fs = std::filesystem;
using namespace moedge;

namespace {

int cmd_ingest(const RunConfig& cfg, std::uint64_t seed, const fs::path& out) {
  DemandTrace trace;
  if (cfg.trace.source == TraceSpec::Source::Synthetic) {
    trace = generate_synthetic_trace(cfg.scenario.num_cells(),
                                     cfg.trace.synthetic.num_steps,
                                     cfg.trace.synthetic.profile, seed);
  } else {
    if (!fs::exists(cfg.trace.csv_path))
      throw ConfigError("trace.csv_path: file not found: " +
                        cfg.trace.csv_path.string());
    trace = ingest_csv(cfg.trace.csv_path, cfg.scenario.step_minutes);
    if (cfg.trace.has_grid) trace = merge_cells(trace, cfg.trace.grid);
  }
  if (cfg.trace.top_k > 0) {
    // Rank cells inside the training window only, so selection never sees
    // the validation or test periods.
    const int window_end = std::min(cfg.trace.split.d1_steps, trace.num_steps());
    trace = select_top_cells(trace, cfg.trace.top_k, 0, window_end);
  }
  auto [d1, d2, d3] = split_dataset(trace, cfg.trace.split);
  const Normalizer norm = fit_normalizer(d1);
  save_trace_csv(norm.apply(d1), out / "d1.csv");
  save_trace_csv(norm.apply(d2), out / "d2.csv");
  save_trace_csv(norm.apply(d3), out / "d3.csv");
  save_normalizer_json(out / "normalizer.json", norm);
  nlohmann::json summary{{"schema_version", 1},
                         {"cells", d1.cells},
                         {"num_cells", d1.num_cells()},
                         {"step_minutes", d1.step_minutes},
                         {"d1_steps", d1.num_steps()},
                         {"d2_steps", d2.num_steps()},
                         {"d3_steps", d3.num_steps()}};
  write_text_file(out / "ingest_summary.json", summary.dump(2) + "\n");
  std::cout << "ingest: " << d1.num_cells() << " cells, splits "
            << d1.num_steps() << "/" << d2.num_steps() << "/" << d3.num_steps()
            << " steps -> " << out.string() << "\n";
  return 0;
}

std::string training_curve_csv(const std::vector<double>& losses) {
  std::string csv = "epoch,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i)
    csv += std::to_string(i + 1) + "," + format_double(losses[i]) + "\n";
  return csv;
}

int cmd_train(const RunConfig& cfg, std::uint64_t seed, const fs::path& out,
              const std::string& target) {
  if (target == "surrogate") {
    const fs::path data_path = out / "surrogate_data.csv";
    std::vector<SurrogateSample> data;
    if (fs::exists(data_path)) {
      data = surrogate_samples_from_csv(read_text_file(data_path),
                                        data_path.filename().string());
      std::cout << "surrogate: reusing " << data.size() << " samples from "
                << data_path.string() << "\n";
    } else {
      data = surrogate_sweep(cfg.scenario.cell_models.front(), cfg.sweep,
                             derive_seed(seed, 21));
      write_text_file(data_path, surrogate_samples_to_csv(data));
      std::cout << "surrogate: swept " << data.size() << " SDP instances -> "
                << data_path.string() << "\n";
    }
    SurrogateTrainConfig stc = cfg.surrogate;
    stc.seed = seed;
    const SurrogateParams params = surrogate_train(data, stc);
    save_surrogate_checkpoint(out / "surrogate.json", params);
    write_text_file(out / "training_curve_surrogate.csv",
                    training_curve_csv(params.epoch_loss));
    std::cout << "surrogate: holdout MAE " << format_double(params.holdout_mae)
              << " -> " << (out / "surrogate.json").string() << "\n";
    return 0;
  }

  const DemandTrace d1 = load_trace_csv(out / "d1.csv",
                                        cfg.scenario.step_minutes, false);
  const WindowedDataset windows =
      build_windows(d1, cfg.scenario.input_window, cfg.scenario.horizon);
  LstmArch arch;
  arch.input_size = 1;
  arch.hidden_size = cfg.hidden_size;
  arch.output_size = cfg.scenario.horizon;
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  if (target == "point") {
    PointParams params = train_point(windows, arch, tc);
    params.input_window = cfg.scenario.input_window;
    save_point_checkpoint(out / "point.json", params);
    write_text_file(out / "training_curve_point.csv",
                    training_curve_csv(params.epoch_loss));
    std::cout << "point: " << windows.num_sequences() << " windows, "
              << arch.param_count() << " params, final loss "
              << format_double(params.epoch_loss.back()) << " -> "
              << (out / "point.json").string() << "\n";
  } else {  // predictor
    VariationalParams params = train_variational(windows, arch, tc);
    params.input_window = cfg.scenario.input_window;
    save_variational_checkpoint(out / "bnn.json", params);
    write_text_file(out / "training_curve_variational.csv",
                    training_curve_csv(params.epoch_loss));
    std::cout << "predictor: " << windows.num_sequences() << " windows, "
              << arch.param_count() << " weight distributions, final loss "
              << format_double(params.epoch_loss.back()) << " -> "
              << (out / "bnn.json").string() << "\n";
  }
  return 0;
}

DemandTrace load_raw_split(const fs::path& path, int step_minutes,
                           const Normalizer& norm) {
  DemandTrace normalized = load_trace_csv(path, step_minutes, false);
  DemandTrace raw = norm.invert(normalized);
  // Round-trip rounding can leave -1e-17 where the raw demand was exactly
  // the per-cell minimum; demands are nonnegative by construction.
  raw.values = raw.values.cwiseMax(0.0);
  return raw;
}

int cmd_simulate(const RunConfig& cfg, std::uint64_t seed, const fs::path& out,
                 const std::string& policy_str) {
  const Policy policy = policy_from_name(policy_str);
  const Normalizer norm = load_normalizer_json(out / "normalizer.json");
  const DemandTrace d3 =
      load_raw_split(out / "d3.csv", cfg.scenario.step_minutes, norm);
  if (d3.num_cells() != cfg.scenario.num_cells())
    throw ConfigError("scenario.num_cells = " +
                      std::to_string(cfg.scenario.num_cells()) +
                      " but the ingested trace has " +
                      std::to_string(d3.num_cells()) + " cells");

  PolicyArtifacts artifacts;
  artifacts.normalizer = &norm;
  VariationalParams bnn;
  PointParams point;
  SurrogateParams surrogate;
  DemandTrace d1;
  if (policy == Policy::SP || policy == Policy::MP || policy == Policy::GD) {
    bnn = load_variational_checkpoint(out / "bnn.json");
    artifacts.bnn = &bnn;
  }
  if (policy == Policy::MP) {
    surrogate = load_surrogate_checkpoint(out / "surrogate.json");
    artifacts.surrogate = &surrogate;
  }
  if (policy == Policy::LP) {
    point = load_point_checkpoint(out / "point.json");
    artifacts.point = &point;
  }
  if (policy == Policy::ST) {
    d1 = load_raw_split(out / "d1.csv", cfg.scenario.step_minutes, norm);
    artifacts.train_trace = &d1;
  }

  PhaseTimings timings;
  const SimReport report =
      run_policy(cfg.scenario, d3, policy, artifacts, seed, &timings);
  const std::string name = policy_name(policy);
  save_sim_report(report, out / ("report_" + name + ".json"));
  write_text_file(out / ("ledger_" + name + ".csv"), ledger_csv(report));
  write_text_file(out / ("actions_" + name + ".csv"), action_log_csv(report));
  write_text_file(out / ("timing_" + name + ".json"), timings_json(timings));
  std::cout << "simulate " << name << ": average profit "
            << format_double(report.average_profit) << ", violations "
            << report.violation_count << " over " << report.measured_steps
            << " measured steps -> "
            << (out / ("report_" + name + ".json")).string() << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const fs::path& out) {
  if (inputs.empty())
    throw ConfigError("report: at least one report JSON path is required");
  std::vector<SimReport> reports;
  std::vector<fs::path> paths;
  for (const std::string& p : inputs) {
    if (!fs::exists(p))
      throw ConfigError("report input not found: " + p);
    paths.emplace_back(p);
    reports.push_back(load_sim_report(p));
  }
  const ReportOutputs outputs = build_report_outputs(reports);
  write_text_file(out / "comparison.csv", outputs.comparison_csv);
  write_text_file(out / "penalty_sweep.csv", outputs.penalty_sweep_csv);
  write_text_file(out / "action_mode_vs_demand.csv", outputs.action_mode_csv);
  write_text_file(out / "plots.svg", outputs.plot_svg);

  // Wall-clock phase summaries live in timing_<policy>.json beside each
  // report; collect whatever is present (non-deterministic by nature).
  std::string runtimes = "policy,seed,forecast_seconds,risk_seconds,"
                         "plan_seconds,decisions,mean_decision_seconds\n";
  bool any_timing = false;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const fs::path timing_path =
        paths[i].parent_path() / ("timing_" + reports[i].policy + ".json");
    if (!fs::exists(timing_path)) continue;
    nlohmann::json t;
    try {
      t = nlohmann::json::parse(read_text_file(timing_path));
    } catch (const nlohmann::json::parse_error&) {
      continue;
    }
    any_timing = true;
    runtimes += reports[i].policy + "," + std::to_string(reports[i].seed) +
                "," + format_double(t.value("forecast_seconds", 0.0)) + "," +
                format_double(t.value("risk_seconds", 0.0)) + "," +
                format_double(t.value("plan_seconds", 0.0)) + "," +
                std::to_string(t.value("decisions", 0)) + "," +
                format_double(t.value("mean_decision_seconds", 0.0)) + "\n";
  }
  if (any_timing) write_text_file(out / "runtimes.csv", runtimes);
  std::cout << "report: " << reports.size() << " runs -> "
            << (out / "comparison.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uncertainty-aware scheduling of moving edge resources"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  app.add_option("--config", config_path, "run configuration JSON file");
  app.add_option("--seed", seed, "master seed for every random stream");
  app.add_option("--out-dir", out_dir, "directory for artifacts and reports");

  CLI::App* ingest =
      app.add_subcommand("ingest", "build, split, and normalize the trace");
  ingest->fallthrough();

  std::string target = "predictor";
  CLI::App* train = app.add_subcommand("train", "train a model artifact");
  train->fallthrough();
  train
      ->add_option("--target", target,
                   "what to train: predictor, point, or surrogate")
      ->check(CLI::IsMember({"predictor", "point", "surrogate"}));

  std::string policy_str;
  CLI::App* simulate =
      app.add_subcommand("simulate", "run one policy over the test split");
  simulate->fallthrough();
  simulate->add_option("--policy", policy_str, "SP, MP, LP, ST, or GD")
      ->required();

  std::vector<std::string> report_inputs;
  CLI::App* report =
      app.add_subcommand("report", "build comparison tables and plots");
  report->fallthrough();
  report->add_option("inputs", report_inputs, "simulation report JSON files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (report->parsed()) return cmd_report(report_inputs, out_dir);
    if (config_path.empty())
      throw ConfigError("missing required option --config <file>");
    const RunConfig cfg = load_run_config(config_path);
    if (ingest->parsed()) return cmd_ingest(cfg, seed, out_dir);
    if (train->parsed()) return cmd_train(cfg, seed, out_dir, target);
    return cmd_simulate(cfg, seed, out_dir, policy_str);
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const ArtifactError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "moedge/sim.hpp"

namespace moedge {

inline constexpr int kReportSchemaVersion = 1;

/// Aggregate report serialization.  The JSON carries the aggregates and
/// time-of-day curves; per-step ledgers and the action log are emitted as
/// CSVs.  Nothing here depends on wall time, so re-runs with identical
/// inputs produce byte-identical files.
std::string sim_report_to_json(const SimReport& report);
SimReport sim_report_from_json(const std::string& text,
                               const std::string& source_name);
void save_sim_report(const SimReport& report,
                     const std::filesystem::path& path);
SimReport load_sim_report(const std::filesystem::path& path);

std::string ledger_csv(const SimReport& report);
std::string action_log_csv(const SimReport& report);

/// Wall-clock phase times; written as a separate file so the report itself
/// stays deterministic.
std::string timings_json(const PhaseTimings& timings);

struct ReportOutputs {
  std::string comparison_csv;
  std::string penalty_sweep_csv;     // rows sorted by penalty constant
  std::string action_mode_csv;       // transit ratio vs time-of-day demand
  std::string plot_svg;
};

ReportOutputs build_report_outputs(const std::vector<SimReport>& reports);

}  // namespace moedge

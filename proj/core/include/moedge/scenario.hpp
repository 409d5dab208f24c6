#pragma once

#include <filesystem>
#include <string>

#include "moedge/sim.hpp"
#include "moedge/surrogate.hpp"

namespace moedge {

/// How to build the inter-cell transit matrix.
struct TransitSpec {
  enum class Kind { Uniform, Grid };
  Kind kind = Kind::Grid;
  int uniform_steps = 2;
  double cell_side_meters = 940.0;
  double speed_kmh = 15.0;
};

TransitMatrix build_transit(const TransitSpec& spec, int num_cells,
                            int step_minutes);

struct SyntheticSpec {
  SyntheticProfile profile;
  int num_steps = 8784;
};

/// Where the demand trace comes from and how it is partitioned.
struct TraceSpec {
  enum class Source { Synthetic, Csv };
  Source source = Source::Synthetic;
  std::filesystem::path csv_path;
  bool has_grid = false;
  GridSpec grid;
  int top_k = 0;  // 0: keep every cell
  SplitSpec split{2160, 2160, 4464};
  SyntheticSpec synthetic;
};

/// Everything one CLI run needs; parsed from a single JSON document with
/// unknown keys rejected.  Seeds always come from the --seed flag, never
/// from the config, so one file describes many reproducible runs.
struct RunConfig {
  ScenarioConfig scenario;  // transit built from transit_spec
  TransitSpec transit_spec;
  TraceSpec trace;
  TrainConfig train;
  int hidden_size = 50;
  SurrogateSweepSpec sweep;
  SurrogateTrainConfig surrogate;
};

RunConfig default_run_config();
RunConfig parse_run_config(const std::string& text,
                           const std::string& source_name);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace moedge

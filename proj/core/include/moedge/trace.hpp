#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <tuple>
#include <vector>

#include "moedge/common.hpp"

namespace moedge {

/// One row of the raw activity CSV: `cell_id,timestamp_ms,demand`.
struct RawActivityRecord {
  long long cell_id = 0;
  long long timestamp_ms = 0;
  double demand = 0.0;
};

/// Rectangular per-cell demand time series d_a(t) at a fixed step length.
struct DemandTrace {
  std::vector<long long> cells;  // cell identifiers, ascending
  int step_minutes = 10;
  Eigen::MatrixXd values;  // num_steps x num_cells, all >= 0

  int num_steps() const { return static_cast<int>(values.rows()); }
  int num_cells() const { return static_cast<int>(values.cols()); }
  double at(int step, int cell_index) const { return values(step, cell_index); }
};

/// Square source grid merged into blocks of merge_factor x merge_factor.
struct GridSpec {
  int source_side_cells = 0;
  int merge_factor = 1;
  double cell_side_meters = 235.0;
};

/// Contiguous prefix/middle/suffix partition lengths (D1/D2/D3).
struct SplitSpec {
  int d1_steps = 0;
  int d2_steps = 0;
  int d3_steps = 0;
};

/// Per-cell min-max scaler fitted on the training split.
struct Normalizer {
  std::vector<long long> cells;
  std::vector<double> offset;  // per-cell min
  std::vector<double> scale;   // per-cell max-min, 1.0 for constant cells

  double apply_one(int cell_index, double v) const {
    return (v - offset[cell_index]) / scale[cell_index];
  }
  double invert_one(int cell_index, double v) const {
    return v * scale[cell_index] + offset[cell_index];
  }
  DemandTrace apply(const DemandTrace& trace) const;
  DemandTrace invert(const DemandTrace& trace) const;
};

/// Parameters of the synthetic generators.
struct SyntheticProfile {
  enum class Kind { DiurnalSinusoid, RotatingHotspot, GaussianNoise };
  Kind kind = Kind::GaussianNoise;
  double base = 1.0;         // baseline demand (the mean, for gaussian noise)
  double amplitude = 0.0;    // sinusoid amplitude / hotspot boost above base
  int period_steps = 144;    // cycle length in steps
  double noise_sd = 0.0;     // additive gaussian noise standard deviation
  double phase_per_cell = 0.0;  // sinusoid phase shift per cell, radians
};

SyntheticProfile::Kind profile_kind_from_name(const std::string& name);
std::string profile_kind_name(SyntheticProfile::Kind kind);

std::vector<RawActivityRecord> parse_activity_csv(const std::string& text,
                                                  const std::string& source_name);
DemandTrace ingest_records(std::vector<RawActivityRecord> records,
                           int step_minutes);
DemandTrace ingest_csv(const std::filesystem::path& path, int step_minutes);

DemandTrace merge_cells(const DemandTrace& trace, const GridSpec& grid);
DemandTrace select_top_cells(const DemandTrace& trace, int k,
                             int window_begin = 0, int window_end = -1);
std::tuple<DemandTrace, DemandTrace, DemandTrace> split_dataset(
    const DemandTrace& trace, const SplitSpec& spec);
DemandTrace generate_synthetic_trace(int num_cells, int num_steps,
                                     const SyntheticProfile& profile,
                                     std::uint64_t seed);

Normalizer fit_normalizer(const DemandTrace& trace);

/// Trace CSV serialization: header `step,cell_<id>,...`, one row per step.
/// Normalized traces may dip below zero outside the fitted split, so the
/// non-negativity check can be waived when loading them.
std::string trace_to_csv(const DemandTrace& trace);
DemandTrace trace_from_csv(const std::string& text, int step_minutes,
                           const std::string& source_name,
                           bool require_nonnegative = true);
void save_trace_csv(const DemandTrace& trace, const std::filesystem::path& path);
DemandTrace load_trace_csv(const std::filesystem::path& path, int step_minutes,
                           bool require_nonnegative = true);

}  // namespace moedge

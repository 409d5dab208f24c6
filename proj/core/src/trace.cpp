#include "moedge/trace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "moedge/io.hpp"
#include "moedge/rng.hpp"

namespace moedge {

DemandTrace Normalizer::apply(const DemandTrace& trace) const {
  DemandTrace out = trace;
  for (int c = 0; c < trace.num_cells(); ++c)
    out.values.col(c) = (trace.values.col(c).array() - offset[c]) / scale[c];
  return out;
}

DemandTrace Normalizer::invert(const DemandTrace& trace) const {
  DemandTrace out = trace;
  for (int c = 0; c < trace.num_cells(); ++c)
    out.values.col(c) = trace.values.col(c).array() * scale[c] + offset[c];
  return out;
}

SyntheticProfile::Kind profile_kind_from_name(const std::string& name) {
  if (name == "diurnal-sinusoid") return SyntheticProfile::Kind::DiurnalSinusoid;
  if (name == "rotating-hotspot") return SyntheticProfile::Kind::RotatingHotspot;
  if (name == "gaussian-noise-around-mean")
    return SyntheticProfile::Kind::GaussianNoise;
  throw ValidationError("unknown synthetic profile '" + name + "'");
}

std::string profile_kind_name(SyntheticProfile::Kind kind) {
  switch (kind) {
    case SyntheticProfile::Kind::DiurnalSinusoid: return "diurnal-sinusoid";
    case SyntheticProfile::Kind::RotatingHotspot: return "rotating-hotspot";
    case SyntheticProfile::Kind::GaussianNoise:
      return "gaussian-noise-around-mean";
  }
  return "?";
}

std::vector<RawActivityRecord> parse_activity_csv(const std::string& text,
                                                  const std::string& source_name) {
  std::vector<RawActivityRecord> records;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv(line);
    if (line_no == 1 && !fields.empty() &&
        fields[0].find_first_not_of("-0123456789") != std::string::npos)
      continue;  // optional header row
    const std::string where = source_name + ":" + std::to_string(line_no);
    if (fields.size() != 3)
      throw ParseError(where + ": expected 3 fields, got " +
                       std::to_string(fields.size()));
    RawActivityRecord rec;
    rec.cell_id = parse_int(fields[0], where);
    rec.timestamp_ms = parse_int(fields[1], where);
    rec.demand = parse_double(fields[2], where);
    if (!(rec.demand >= 0.0))
      throw ValidationError(where + ": negative demand " + fields[2]);
    records.push_back(rec);
  }
  return records;
}

DemandTrace ingest_records(std::vector<RawActivityRecord> records,
                           int step_minutes) {
  if (step_minutes <= 0) throw ValidationError("step_minutes must be positive");
  if (records.empty()) throw ParseError("no records");

  // Epoch-aligned buckets of step_minutes, aggregated by summation.
  const long long bucket_ms = 60000LL * step_minutes;
  long long first_bucket = records[0].timestamp_ms / bucket_ms;
  long long last_bucket = first_bucket;
  std::map<long long, int> cell_index;
  for (const auto& rec : records) {
    if (!(rec.demand >= 0.0))
      throw ValidationError("negative demand for cell " +
                            std::to_string(rec.cell_id));
    const long long bucket = rec.timestamp_ms / bucket_ms;
    first_bucket = std::min(first_bucket, bucket);
    last_bucket = std::max(last_bucket, bucket);
    cell_index.emplace(rec.cell_id, 0);
  }
  DemandTrace trace;
  trace.step_minutes = step_minutes;
  for (auto& [id, idx] : cell_index) {
    idx = static_cast<int>(trace.cells.size());
    trace.cells.push_back(id);
  }
  const auto num_steps = static_cast<int>(last_bucket - first_bucket + 1);
  // num_cells() reads values.cols(), which is not sized yet: use cells.size().
  trace.values =
      Eigen::MatrixXd::Zero(num_steps, static_cast<int>(trace.cells.size()));
  for (const auto& rec : records) {
    const auto step = static_cast<int>(rec.timestamp_ms / bucket_ms - first_bucket);
    trace.values(step, cell_index[rec.cell_id]) += rec.demand;
  }
  return trace;
}

DemandTrace ingest_csv(const std::filesystem::path& path, int step_minutes) {
  return ingest_records(
      parse_activity_csv(read_text_file(path), path.filename().string()),
      step_minutes);
}

DemandTrace merge_cells(const DemandTrace& trace, const GridSpec& grid) {
  const int side = grid.source_side_cells;
  const int factor = grid.merge_factor;
  if (side <= 0 || factor <= 0 || side % factor != 0)
    throw ValidationError("grid side must be a positive multiple of merge_factor");
  if (trace.num_cells() != side * side)
    throw ValidationError("trace has " + std::to_string(trace.num_cells()) +
                          " cells, grid expects " + std::to_string(side * side));
  const int merged_side = side / factor;
  DemandTrace out;
  out.step_minutes = trace.step_minutes;
  out.cells.resize(static_cast<std::size_t>(merged_side) * merged_side);
  std::iota(out.cells.begin(), out.cells.end(), 0LL);
  out.values = Eigen::MatrixXd::Zero(trace.num_steps(), merged_side * merged_side);
  for (int c = 0; c < trace.num_cells(); ++c) {
    const int row = c / side, col = c % side;
    const int block = (row / factor) * merged_side + col / factor;
    out.values.col(block) += trace.values.col(c);
  }
  return out;
}

DemandTrace select_top_cells(const DemandTrace& trace, int k, int window_begin,
                             int window_end) {
  if (window_end < 0) window_end = trace.num_steps();
  if (k < 1 || k > trace.num_cells())
    throw ValidationError("k must be in [1, num_cells]");
  if (window_begin < 0 || window_end > trace.num_steps() ||
      window_begin >= window_end)
    throw ValidationError("bad top-k window");

  std::vector<int> order(trace.num_cells());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> means(trace.num_cells());
  for (int c = 0; c < trace.num_cells(); ++c)
    means[c] =
        trace.values.col(c).segment(window_begin, window_end - window_begin).mean();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (means[a] != means[b]) return means[a] > means[b];
    return trace.cells[a] < trace.cells[b];
  });
  std::vector<int> keep(order.begin(), order.begin() + k);
  std::sort(keep.begin(), keep.end());  // preserve ascending cell-id order

  DemandTrace out;
  out.step_minutes = trace.step_minutes;
  out.values.resize(trace.num_steps(), k);
  for (int i = 0; i < k; ++i) {
    out.cells.push_back(trace.cells[keep[i]]);
    out.values.col(i) = trace.values.col(keep[i]);
  }
  return out;
}

std::tuple<DemandTrace, DemandTrace, DemandTrace> split_dataset(
    const DemandTrace& trace, const SplitSpec& spec) {
  if (spec.d1_steps < 1 || spec.d2_steps < 1 || spec.d3_steps < 1)
    throw ValidationError("split lengths must be positive");
  if (spec.d1_steps + spec.d2_steps + spec.d3_steps != trace.num_steps())
    throw ValidationError("split lengths must sum to trace length");
  auto slice = [&](int begin, int count) {
    DemandTrace part;
    part.cells = trace.cells;
    part.step_minutes = trace.step_minutes;
    part.values = trace.values.middleRows(begin, count);
    return part;
  };
  return {slice(0, spec.d1_steps), slice(spec.d1_steps, spec.d2_steps),
          slice(spec.d1_steps + spec.d2_steps, spec.d3_steps)};
}

DemandTrace generate_synthetic_trace(int num_cells, int num_steps,
                                     const SyntheticProfile& profile,
                                     std::uint64_t seed) {
  if (num_cells < 1 || num_steps < 1)
    throw ValidationError("num_cells and num_steps must be positive");
  if (profile.period_steps < 1)
    throw ValidationError("period_steps must be positive");
  if (!(profile.amplitude >= 0.0) || !(profile.noise_sd >= 0.0) ||
      !std::isfinite(profile.base) || !std::isfinite(profile.amplitude) ||
      !std::isfinite(profile.noise_sd) || !std::isfinite(profile.phase_per_cell))
    throw ValidationError("profile parameters must be finite, amplitudes >= 0");

  DemandTrace trace;
  trace.step_minutes = 10;
  trace.cells.resize(num_cells);
  std::iota(trace.cells.begin(), trace.cells.end(), 0LL);
  trace.values.resize(num_steps, num_cells);

  Rng rng(seed);
  const int dwell = std::max(1, profile.period_steps / num_cells);
  for (int t = 0; t < num_steps; ++t) {
    const int hot = (t / dwell) % num_cells;
    for (int c = 0; c < num_cells; ++c) {
      double v = profile.base;
      switch (profile.kind) {
        case SyntheticProfile::Kind::DiurnalSinusoid:
          v += profile.amplitude * std::sin(2.0 * M_PI * t / profile.period_steps +
                                            profile.phase_per_cell * c);
          break;
        case SyntheticProfile::Kind::RotatingHotspot:
          if (c == hot) v += profile.amplitude;
          break;
        case SyntheticProfile::Kind::GaussianNoise:
          break;
      }
      v += profile.noise_sd * rng.normal();
      trace.values(t, c) = std::max(0.0, v);
    }
  }
  return trace;
}

Normalizer fit_normalizer(const DemandTrace& trace) {
  if (trace.num_steps() < 1 || trace.num_cells() < 1)
    throw ValidationError("cannot fit normalizer on empty trace");
  Normalizer norm;
  norm.cells = trace.cells;
  for (int c = 0; c < trace.num_cells(); ++c) {
    const double lo = trace.values.col(c).minCoeff();
    const double hi = trace.values.col(c).maxCoeff();
    norm.offset.push_back(lo);
    norm.scale.push_back(hi > lo ? hi - lo : 1.0);
  }
  return norm;
}

std::string trace_to_csv(const DemandTrace& trace) {
  std::string out = "step";
  for (long long id : trace.cells) out += ",cell_" + std::to_string(id);
  out += "\n";
  for (int t = 0; t < trace.num_steps(); ++t) {
    out += std::to_string(t);
    for (int c = 0; c < trace.num_cells(); ++c)
      out += "," + format_double(trace.values(t, c));
    out += "\n";
  }
  return out;
}

DemandTrace trace_from_csv(const std::string& text, int step_minutes,
                           const std::string& source_name,
                           bool require_nonnegative) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source_name + ": empty trace file");
  auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "step")
    throw ParseError(source_name + ": expected header step,cell_<id>,...");
  DemandTrace trace;
  trace.step_minutes = step_minutes;
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i].rfind("cell_", 0) != 0)
      throw ParseError(source_name + ": bad column name '" + header[i] + "'");
    trace.cells.push_back(parse_int(header[i].substr(5), source_name));
  }
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::string where = source_name + ":" + std::to_string(line_no);
    auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw ParseError(where + ": expected " + std::to_string(header.size()) +
                       " fields, got " + std::to_string(fields.size()));
    std::vector<double> row;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const double v = parse_double(fields[i], where);
      if (require_nonnegative && !(v >= 0.0))
        throw ValidationError(where + ": negative demand");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(source_name + ": trace has no steps");
  // num_cells() reads values.cols(), which is not sized yet: use cells.size().
  trace.values.resize(static_cast<int>(rows.size()),
                      static_cast<int>(trace.cells.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t c = 0; c < rows[t].size(); ++c)
      trace.values(static_cast<int>(t), static_cast<int>(c)) = rows[t][c];
  return trace;
}

void save_trace_csv(const DemandTrace& trace, const std::filesystem::path& path) {
  write_text_file(path, trace_to_csv(trace));
}

DemandTrace load_trace_csv(const std::filesystem::path& path, int step_minutes,
                           bool require_nonnegative) {
  return trace_from_csv(read_text_file(path), step_minutes,
                        path.filename().string(), require_nonnegative);
}

}  // namespace moedge

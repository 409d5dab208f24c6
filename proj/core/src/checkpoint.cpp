#include "moedge/checkpoint.hpp"

#include <json.hpp>
#include <string>
#include <vector>

#include "moedge/io.hpp"

namespace moedge {

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& where,
                                 long expected_size) {
  if (!j.is_array())
    throw ArtifactError(where + ": expected an array");
  if (expected_size >= 0 && static_cast<long>(j.size()) != expected_size)
    throw ArtifactError(where + ": expected " + std::to_string(expected_size) +
                        " values, found " + std::to_string(j.size()));
  Eigen::VectorXd v(static_cast<long>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw ArtifactError(where + ": expected numeric values");
    v[static_cast<long>(i)] = j[i].get<double>();
  }
  return v;
}

json load_checkpoint_json(const std::filesystem::path& path,
                          const std::string& expected_kind) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ArtifactError(path.string() + ": invalid JSON: " + e.what());
  }
  const std::string name = path.filename().string();
  if (!j.is_object() || j.value("format", "") != "moedge-checkpoint")
    throw ArtifactError(name + ": not a moedge checkpoint");
  if (j.value("schema_version", -1) != kCheckpointSchemaVersion)
    throw ArtifactError(name + ": unsupported checkpoint schema version");
  const std::string kind = j.value("kind", "");
  if (kind != expected_kind)
    throw ArtifactError(name + ": checkpoint kind '" + kind +
                        "' does not match expected '" + expected_kind + "'");
  return j;
}

json arch_to_json(const LstmArch& arch) {
  return json{{"input_size", arch.input_size},
              {"hidden_size", arch.hidden_size},
              {"output_size", arch.output_size},
              {"layers", arch.layers}};
}

LstmArch arch_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ArtifactError(where + ": missing arch object");
  LstmArch arch;
  arch.input_size = j.value("input_size", 0);
  arch.hidden_size = j.value("hidden_size", 0);
  arch.output_size = j.value("output_size", 0);
  arch.layers = j.value("layers", 0);
  try {
    arch.validate();
  } catch (const Error& e) {
    throw ArtifactError(where + ": invalid arch: " + e.what());
  }
  return arch;
}

}  // namespace

void save_variational_checkpoint(const std::filesystem::path& path,
                                 const VariationalParams& params) {
  json j{{"format", "moedge-checkpoint"},
         {"schema_version", kCheckpointSchemaVersion},
         {"kind", "variational"},
         {"arch", arch_to_json(params.arch)},
         {"input_window", params.input_window},
         {"prior_sd", params.prior_sd},
         {"obs_log_variance", params.obs_log_variance},
         {"mean", vector_to_json(params.mean)},
         {"rho", vector_to_json(params.rho)},
         {"epoch_loss", params.epoch_loss}};
  write_text_file(path, j.dump(2) + "\n");
}

VariationalParams load_variational_checkpoint(const std::filesystem::path& path) {
  const json j = load_checkpoint_json(path, "variational");
  const std::string name = path.filename().string();
  VariationalParams params;
  params.arch = arch_from_json(j.contains("arch") ? j["arch"] : json(), name);
  params.input_window = j.value("input_window", 0);
  if (params.input_window < 1)
    throw ArtifactError(name + ": missing or invalid input_window");
  params.prior_sd = j.value("prior_sd", 0.0);
  if (!(params.prior_sd > 0.0))
    throw ArtifactError(name + ": prior_sd must be > 0");
  params.obs_log_variance = j.value("obs_log_variance", 0.0);
  const long n = params.arch.param_count();
  params.mean = vector_from_json(j.contains("mean") ? j["mean"] : json(),
                                 name + ": mean", n);
  params.rho = vector_from_json(j.contains("rho") ? j["rho"] : json(),
                                name + ": rho", n);
  if (j.contains("epoch_loss"))
    params.epoch_loss = j["epoch_loss"].get<std::vector<double>>();
  return params;
}

void save_point_checkpoint(const std::filesystem::path& path,
                           const PointParams& params) {
  json j{{"format", "moedge-checkpoint"},
         {"schema_version", kCheckpointSchemaVersion},
         {"kind", "point"},
         {"arch", arch_to_json(params.arch)},
         {"input_window", params.input_window},
         {"theta", vector_to_json(params.theta)},
         {"epoch_loss", params.epoch_loss}};
  write_text_file(path, j.dump(2) + "\n");
}

PointParams load_point_checkpoint(const std::filesystem::path& path) {
  const json j = load_checkpoint_json(path, "point");
  const std::string name = path.filename().string();
  PointParams params;
  params.arch = arch_from_json(j.contains("arch") ? j["arch"] : json(), name);
  params.input_window = j.value("input_window", 0);
  if (params.input_window < 1)
    throw ArtifactError(name + ": missing or invalid input_window");
  params.theta = vector_from_json(j.contains("theta") ? j["theta"] : json(),
                                  name + ": theta", params.arch.param_count());
  if (j.contains("epoch_loss"))
    params.epoch_loss = j["epoch_loss"].get<std::vector<double>>();
  return params;
}

void save_surrogate_checkpoint(const std::filesystem::path& path,
                               const SurrogateParams& params) {
  json j{{"format", "moedge-checkpoint"},
         {"schema_version", kCheckpointSchemaVersion},
         {"kind", "surrogate"},
         {"layer_sizes", params.arch.layer_sizes},
         {"theta", vector_to_json(params.theta)},
         {"feature_mean", vector_to_json(params.feature_mean)},
         {"feature_scale", vector_to_json(params.feature_scale)},
         {"target_mean", params.target_mean},
         {"target_scale", params.target_scale},
         {"range_lo", vector_to_json(params.range_lo)},
         {"range_hi", vector_to_json(params.range_hi)},
         {"holdout_mae", params.holdout_mae},
         {"epoch_loss", params.epoch_loss}};
  write_text_file(path, j.dump(2) + "\n");
}

SurrogateParams load_surrogate_checkpoint(const std::filesystem::path& path) {
  const json j = load_checkpoint_json(path, "surrogate");
  const std::string name = path.filename().string();
  SurrogateParams params;
  if (!j.contains("layer_sizes") || !j["layer_sizes"].is_array())
    throw ArtifactError(name + ": missing layer_sizes");
  params.arch.layer_sizes = j["layer_sizes"].get<std::vector<int>>();
  if (params.arch.layer_sizes.size() < 2)
    throw ArtifactError(name + ": layer_sizes needs at least input and output");
  params.theta = vector_from_json(j.contains("theta") ? j["theta"] : json(),
                                  name + ": theta", params.arch.param_count());
  params.feature_mean = vector_from_json(
      j.contains("feature_mean") ? j["feature_mean"] : json(),
      name + ": feature_mean", 4);
  params.feature_scale = vector_from_json(
      j.contains("feature_scale") ? j["feature_scale"] : json(),
      name + ": feature_scale", 4);
  params.target_mean = j.value("target_mean", 0.0);
  params.target_scale = j.value("target_scale", 1.0);
  params.range_lo = vector_from_json(
      j.contains("range_lo") ? j["range_lo"] : json(), name + ": range_lo", 4);
  params.range_hi = vector_from_json(
      j.contains("range_hi") ? j["range_hi"] : json(), name + ": range_hi", 4);
  params.holdout_mae = j.value("holdout_mae", 0.0);
  if (j.contains("epoch_loss"))
    params.epoch_loss = j["epoch_loss"].get<std::vector<double>>();
  return params;
}

void save_normalizer_json(const std::filesystem::path& path,
                          const Normalizer& norm) {
  json j{{"format", "moedge-normalizer"},
         {"schema_version", kCheckpointSchemaVersion},
         {"cells", norm.cells},
         {"offset", norm.offset},
         {"scale", norm.scale}};
  write_text_file(path, j.dump(2) + "\n");
}

Normalizer load_normalizer_json(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ArtifactError(path.string() + ": invalid JSON: " + e.what());
  }
  const std::string name = path.filename().string();
  if (!j.is_object() || j.value("format", "") != "moedge-normalizer")
    throw ArtifactError(name + ": not a moedge normalizer");
  if (j.value("schema_version", -1) != kCheckpointSchemaVersion)
    throw ArtifactError(name + ": unsupported normalizer schema version");
  Normalizer norm;
  try {
    norm.cells = j.value("cells", std::vector<long long>{});
    norm.offset = j.value("offset", std::vector<double>{});
    norm.scale = j.value("scale", std::vector<double>{});
  } catch (const json::exception& e) {
    throw ArtifactError(name + ": " + e.what());
  }
  if (norm.cells.empty() || norm.cells.size() != norm.offset.size() ||
      norm.cells.size() != norm.scale.size())
    throw ArtifactError(name + ": cells/offset/scale sizes disagree");
  for (double s : norm.scale)
    if (!(s > 0.0))
      throw ArtifactError(name + ": normalizer scales must be > 0");
  return norm;
}

}  // namespace moedge

#pragma once

#include <filesystem>

#include "moedge/predictor.hpp"
#include "moedge/surrogate.hpp"
#include "moedge/trace.hpp"

namespace moedge {

inline constexpr int kCheckpointSchemaVersion = 1;

/// Versioned JSON checkpoints.  Loading validates format, kind, schema
/// version, and every array size against the declared architecture, and
/// throws ArtifactError on any mismatch.
void save_variational_checkpoint(const std::filesystem::path& path,
                                 const VariationalParams& params);
VariationalParams load_variational_checkpoint(const std::filesystem::path& path);

void save_point_checkpoint(const std::filesystem::path& path,
                           const PointParams& params);
PointParams load_point_checkpoint(const std::filesystem::path& path);

void save_surrogate_checkpoint(const std::filesystem::path& path,
                               const SurrogateParams& params);
SurrogateParams load_surrogate_checkpoint(const std::filesystem::path& path);

void save_normalizer_json(const std::filesystem::path& path,
                          const Normalizer& norm);
Normalizer load_normalizer_json(const std::filesystem::path& path);

}  // namespace moedge
